#include "drtune/schedule.hpp"

namespace drtune {

NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw ValueError("build_linear_schedule: T must be >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ValueError("build_linear_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta = Eigen::ArrayXd::LinSpaced(T, beta_start, beta_end);
  s.alpha = 1.0 - s.beta;
  s.alpha_bar.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

}  // namespace drtune
