#pragma once

#include <Eigen/Dense>

#include "drtune/error.hpp"

namespace drtune {

// Per-step noise schedule. Index convention: step t in 1..T maps to
// array index t-1; alpha_bar_prev(1) is the alpha_bar_0 := 1 boundary.
struct NoiseSchedule {
  int T = 0;
  Eigen::ArrayXd beta;
  Eigen::ArrayXd alpha;
  Eigen::ArrayXd alpha_bar;

  double beta_at(int t) const { return beta[t - 1]; }
  double alpha_at(int t) const { return alpha[t - 1]; }
  double alpha_bar_at(int t) const { return alpha_bar[t - 1]; }
  double alpha_bar_prev(int t) const { return t == 1 ? 1.0 : alpha_bar[t - 2]; }

  void check_step(int t) const {
    if (t < 1 || t > T) throw ValueError("step index out of range [1,T]");
  }
};

NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end);

}  // namespace drtune
