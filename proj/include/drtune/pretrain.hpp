#pragma once

#include "drtune/dataset.hpp"
#include "drtune/denoiser.hpp"
#include "drtune/schedule.hpp"

namespace drtune {

struct PretrainOptions {
  int iters = 4000;
  double lr = 1e-3;
  int batch = 64;
};

struct PretrainLog {
  std::vector<double> loss;  // one entry per optimizer step
};

// Epsilon-prediction training: minimize E ||eps - eps_theta(q(x_t|x0), t)||^2
// over uniform t. Throws ValueError if the loss goes non-finite.
PretrainLog pretrain(Denoiser& model, const ToyDataset& ds,
                     const NoiseSchedule& sched, const PretrainOptions& opt,
                     Rng& rng);

}  // namespace drtune
