#pragma once

#include <cmath>
#include <functional>

#include "drtune/ops.hpp"

namespace drtune {

// Scalar-valued function of one tensor, built on a caller-supplied tape.
using TensorFn = std::function<Tensor(Tape&, const Tensor&)>;

// Central-difference oracle. Returns the max over coordinates of
// |analytic - central difference| / (|central difference| + 1e-8).
inline double finite_diff_check(const TensorFn& f, const Tensor& x,
                                double step = 1e-5) {
  Array analytic;
  {
    Tape tape;
    Tensor leaf = tape.leaf(x.shape, x.data);
    Tensor loss = f(tape, leaf);
    tape.backward(loss);
    analytic = tape.grad(leaf);
  }
  auto eval = [&](const Array& v) {
    Tape tape;
    Tensor leaf = tape.leaf(x.shape, v);
    return f(tape, leaf).scalar();
  };
  double worst = 0.0;
  Array v = x.data;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double orig = v[i];
    v[i] = orig + step;
    const double hi = eval(v);
    v[i] = orig - step;
    const double lo = eval(v);
    v[i] = orig;
    const double fd = (hi - lo) / (2.0 * step);
    const double err = std::abs(analytic[i] - fd) / (std::abs(fd) + 1e-8);
    if (err > worst) worst = err;
  }
  return worst;
}

}  // namespace drtune
