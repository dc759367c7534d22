#include "drtune/sampler.hpp"

#include <cmath>

namespace drtune {

SamplerCoeffs ddpm_coeffs(const NoiseSchedule& sched) {
  const int T = sched.T;
  SamplerCoeffs co;
  co.a.resize(T);
  co.b.resize(T);
  co.c.resize(T);
  for (int t = 1; t <= T; ++t) {
    const double alpha = sched.alpha_at(t);
    const double abar = sched.alpha_bar_at(t);
    const double abar_prev = sched.alpha_bar_prev(t);
    co.a[t - 1] = 1.0 / std::sqrt(alpha);
    co.b[t - 1] = -(1.0 - alpha) / (std::sqrt(alpha) * std::sqrt(1.0 - abar));
    // beta-tilde posterior variance; abar_0 := 1 forces c_1 = 0.
    co.c[t - 1] =
        std::sqrt((1.0 - abar_prev) / (1.0 - abar) * sched.beta_at(t));
  }
  return co;
}

SamplerCoeffs ddim_coeffs(const NoiseSchedule& sched, double eta) {
  if (eta < 0.0 || eta > 1.0) throw ValueError("ddim_coeffs: eta outside [0,1]");
  const int T = sched.T;
  SamplerCoeffs co;
  co.a.resize(T);
  co.b.resize(T);
  co.c.resize(T);
  for (int t = 1; t <= T; ++t) {
    const double abar = sched.alpha_bar_at(t);
    const double abar_prev = sched.alpha_bar_prev(t);
    const double sigma = eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar)) *
                         std::sqrt(1.0 - abar / abar_prev);
    co.a[t - 1] = std::sqrt(abar_prev / abar);
    co.b[t - 1] = std::sqrt(1.0 - abar_prev - sigma * sigma) -
                  std::sqrt(abar_prev * (1.0 - abar) / abar);
    co.c[t - 1] = sigma;
  }
  return co;
}

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps,
                       const NoiseSchedule& sched) {
  if (t == 0) return x0;
  sched.check_step(t);
  if (x0.shape != eps.shape)
    throw ShapeError("forward_diffuse: eps shape differs from x0");
  const double abar = sched.alpha_bar_at(t);
  return add(mul(x0, std::sqrt(abar)), mul(eps, std::sqrt(1.0 - abar)));
}

Tensor sample_step(const Tensor& x_t, const Tensor& eps_hat, int t,
                   const SamplerCoeffs& coeffs, const Tensor& noise) {
  if (x_t.shape != eps_hat.shape)
    throw ShapeError("sample_step: eps_hat shape differs from x_t");
  if (t < 1 || t > static_cast<int>(coeffs.a.size()))
    throw ValueError("sample_step: step index out of range");
  Tensor out = add(mul(x_t, coeffs.a_at(t)), mul(eps_hat, coeffs.b_at(t)));
  const double c = coeffs.c_at(t);
  if (c != 0.0) {
    if (noise.shape != x_t.shape)
      throw ShapeError("sample_step: noise shape differs from x_t");
    out = add(out, mul(noise, c));
  }
  return out;
}

Tensor predict_x0(const Tensor& x_t, const Tensor& eps_hat, int t,
                  const NoiseSchedule& sched) {
  sched.check_step(t);
  const double abar = sched.alpha_bar_at(t);
  return mul(sub(x_t, mul(eps_hat, std::sqrt(1.0 - abar))),
             1.0 / std::sqrt(abar));
}

}  // namespace drtune
