#pragma once

#include "drtune/ops.hpp"
#include "drtune/schedule.hpp"

namespace drtune {

// The (a_t, b_t, c_t) triples of the abstracted one-step update
//   x_{t-1} = a_t x_t + b_t eps_hat + c_t noise.
struct SamplerCoeffs {
  Eigen::ArrayXd a;
  Eigen::ArrayXd b;
  Eigen::ArrayXd c;

  double a_at(int t) const { return a[t - 1]; }
  double b_at(int t) const { return b[t - 1]; }
  double c_at(int t) const { return c[t - 1]; }
  bool deterministic() const { return (c == 0.0).all(); }
};

// DDPM ancestral sampler with the beta-tilde posterior variance.
SamplerCoeffs ddpm_coeffs(const NoiseSchedule& sched);

// DDIM family; eta = 0 is the deterministic sampler, eta = 1 matches
// the DDPM step distribution.
SamplerCoeffs ddim_coeffs(const NoiseSchedule& sched, double eta);

// q(x_t | x_0): sqrt(abar_t) x0 + sqrt(1 - abar_t) eps. t = 0 returns x0.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps,
                       const NoiseSchedule& sched);

// One step of the abstracted sampler, recorded on the gradient tape.
Tensor sample_step(const Tensor& x_t, const Tensor& eps_hat, int t,
                   const SamplerCoeffs& coeffs, const Tensor& noise);

// Closed-form x0 estimate: (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t,
                  const NoiseSchedule& sched);

}  // namespace drtune
