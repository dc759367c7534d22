#pragma once

#include <vector>

#include "drtune/denoiser.hpp"

namespace drtune {

struct AdamWConfig {
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 0.1;  // <= 0 disables clipping
};

struct AdamWState {
  long step = 0;
  std::vector<Array> m;
  std::vector<Array> v;
};

// sqrt of the sum of squared entries over all parameter gradients.
double grad_global_norm(const std::vector<Array>& grads);

// Global-norm clip followed by one AdamW update. grads must align with
// params one-to-one; a non-finite gradient raises ValueError.
void clip_and_step(const std::vector<ParamBlock*>& params,
                   std::vector<Array> grads, AdamWState& state,
                   const AdamWConfig& cfg);

}  // namespace drtune
