#include "drtune/ops.hpp"

#include <cmath>
#include <utility>

namespace drtune {
namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape != b.shape)
    throw ShapeError(std::string(what) + ": shape mismatch");
}

Tensor attach(Tape* tape, Shape shape, Array data, Tape::Backprop bp) {
  Tensor out(std::move(shape), std::move(data));
  if (tape) {
    out.tape = tape;
    out.node = tape->add_node(std::move(bp));
  }
  return out;
}

// Binary elementwise with local gradients da, db (as functions of gout).
template <typename FData, typename FGa, typename FGb>
Tensor binary_ew(const Tensor& a, const Tensor& b, const char* what,
                 FData fdata, FGa fga, FGb fgb) {
  check_same_shape(a, b, what);
  Tape* tape = result_tape(a, b);
  Array out = fdata(a.data, b.data);
  if (!tape) return Tensor(a.shape, std::move(out));
  const int na = a.node, nb = b.node;
  Array av = a.data, bv = b.data;
  return attach(tape, a.shape, std::move(out),
                [na, nb, av = std::move(av), bv = std::move(bv), fga,
                 fgb](const Array& g, Tape& t) {
                  if (na >= 0) t.accumulate(na, fga(g, av, bv));
                  if (nb >= 0) t.accumulate(nb, fgb(g, av, bv));
                });
}

template <typename FData, typename FGrad>
Tensor unary_ew(const Tensor& x, FData fdata, FGrad fgrad) {
  Tape* tape = result_tape(x);
  Array out = fdata(x.data);
  if (!tape) return Tensor(x.shape, std::move(out));
  const int nx = x.node;
  Array xv = x.data;
  return attach(tape, x.shape, std::move(out),
                [nx, xv = std::move(xv), fgrad](const Array& g, Tape& t) {
                  if (nx >= 0) t.accumulate(nx, fgrad(g, xv));
                });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tape* tape = result_tape(a, b);
  Array out = a.data + b.data;
  if (!tape) return Tensor(a.shape, std::move(out));
  const int na = a.node, nb = b.node;
  return attach(tape, a.shape, std::move(out),
                [na, nb](const Array& g, Tape& t) {
                  if (na >= 0) t.accumulate(na, g);
                  if (nb >= 0) t.accumulate(nb, g);
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tape* tape = result_tape(a, b);
  Array out = a.data - b.data;
  if (!tape) return Tensor(a.shape, std::move(out));
  const int na = a.node, nb = b.node;
  return attach(tape, a.shape, std::move(out),
                [na, nb](const Array& g, Tape& t) {
                  if (na >= 0) t.accumulate(na, g);
                  if (nb >= 0) t.accumulate(nb, Array(-g));
                });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_ew(
      a, b, "mul", [](const Array& x, const Array& y) { return Array(x * y); },
      [](const Array& g, const Array&, const Array& y) { return Array(g * y); },
      [](const Array& g, const Array& x, const Array&) { return Array(g * x); });
}

Tensor div(const Tensor& a, const Tensor& b) {
  if ((b.data.abs() <= 0.0).any()) throw ValueError("div: division by zero");
  return binary_ew(
      a, b, "div", [](const Array& x, const Array& y) { return Array(x / y); },
      [](const Array& g, const Array&, const Array& y) { return Array(g / y); },
      [](const Array& g, const Array& x, const Array& y) {
        return Array(-g * x / (y * y));
      });
}

Tensor add(const Tensor& a, double b) {
  Tape* tape = result_tape(a);
  Array out = a.data + b;
  if (!tape) return Tensor(a.shape, std::move(out));
  const int na = a.node;
  return attach(tape, a.shape, std::move(out), [na](const Array& g, Tape& t) {
    if (na >= 0) t.accumulate(na, g);
  });
}

Tensor mul(const Tensor& a, double b) {
  Tape* tape = result_tape(a);
  Array out = a.data * b;
  if (!tape) return Tensor(a.shape, std::move(out));
  const int na = a.node;
  return attach(tape, a.shape, std::move(out),
                [na, b](const Array& g, Tape& t) {
                  if (na >= 0) t.accumulate(na, Array(g * b));
                });
}

Tensor neg(const Tensor& x) { return mul(x, -1.0); }

Tensor abs(const Tensor& x) {
  return unary_ew(
      x, [](const Array& v) { return Array(v.abs()); },
      [](const Array& g, const Array& v) { return Array(g * v.sign()); });
}

Tensor square(const Tensor& x) {
  return unary_ew(
      x, [](const Array& v) { return Array(v * v); },
      [](const Array& g, const Array& v) { return Array(2.0 * g * v); });
}

Tensor sqrt(const Tensor& x) {
  if ((x.data < 0.0).any()) throw ValueError("sqrt: negative input");
  return unary_ew(
      x, [](const Array& v) { return Array(v.sqrt()); },
      [](const Array& g, const Array& v) {
        return Array(g * 0.5 / v.sqrt());
      });
}

Tensor exp(const Tensor& x) {
  return unary_ew(
      x, [](const Array& v) { return Array(v.exp()); },
      [](const Array& g, const Array& v) { return Array(g * v.exp()); });
}

Tensor silu(const Tensor& x) {
  // x * sigmoid(x); d/dx = sig * (1 + x * (1 - sig))
  return unary_ew(
      x,
      [](const Array& v) {
        return Array(v / (1.0 + (-v).exp()));
      },
      [](const Array& g, const Array& v) {
        const Array sig = 1.0 / (1.0 + (-v).exp());
        return Array(g * sig * (1.0 + v * (1.0 - sig)));
      });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("matmul: both operands must be rank-2");
  const int m = a.shape[0], k = a.shape[1];
  const int k2 = b.shape[0], n = b.shape[1];
  if (k != k2) throw ShapeError("matmul: inner dimensions disagree");

  Eigen::Map<const MatrixRM> ma(a.data.data(), m, k);
  Eigen::Map<const MatrixRM> mb(b.data.data(), k, n);
  Array out(static_cast<Eigen::Index>(m) * n);
  Eigen::Map<MatrixRM>(out.data(), m, n) = ma * mb;

  Tape* tape = result_tape(a, b);
  if (!tape) return Tensor({m, n}, std::move(out));
  const int na = a.node, nb = b.node;
  Array av = a.data, bv = b.data;
  return attach(tape, {m, n}, std::move(out),
                [na, nb, av = std::move(av), bv = std::move(bv), m, k,
                 n](const Array& gflat, Tape& t) {
                  Eigen::Map<const MatrixRM> g(gflat.data(), m, n);
                  Eigen::Map<const MatrixRM> ma2(av.data(), m, k);
                  Eigen::Map<const MatrixRM> mb2(bv.data(), k, n);
                  if (na >= 0) {
                    Array ga(static_cast<Eigen::Index>(m) * k);
                    Eigen::Map<MatrixRM>(ga.data(), m, k) = g * mb2.transpose();
                    t.accumulate(na, ga);
                  }
                  if (nb >= 0) {
                    Array gb(static_cast<Eigen::Index>(k) * n);
                    Eigen::Map<MatrixRM>(gb.data(), k, n) = ma2.transpose() * g;
                    t.accumulate(nb, gb);
                  }
                });
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("transpose: rank-2 only");
  const int m = x.shape[0], n = x.shape[1];
  Array out(x.size());
  Eigen::Map<MatrixRM>(out.data(), n, m) =
      Eigen::Map<const MatrixRM>(x.data.data(), m, n).transpose();
  Tape* tape = result_tape(x);
  if (!tape) return Tensor({n, m}, std::move(out));
  const int nx = x.node;
  return attach(tape, {n, m}, std::move(out),
                [nx, m, n](const Array& gflat, Tape& t) {
                  if (nx < 0) return;
                  Array gx(gflat.size());
                  Eigen::Map<MatrixRM>(gx.data(), m, n) =
                      Eigen::Map<const MatrixRM>(gflat.data(), n, m).transpose();
                  t.accumulate(nx, gx);
                });
}

Tensor sum(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("sum: empty tensor");
  Array out(1);
  out[0] = x.data.sum();
  Tape* tape = result_tape(x);
  if (!tape) return Tensor({1}, std::move(out));
  const int nx = x.node;
  const Eigen::Index n = x.size();
  return attach(tape, {1}, std::move(out), [nx, n](const Array& g, Tape& t) {
    if (nx >= 0) t.accumulate(nx, Array::Constant(n, g[0]));
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  Array out(1);
  out[0] = x.data.mean();
  Tape* tape = result_tape(x);
  if (!tape) return Tensor({1}, std::move(out));
  const int nx = x.node;
  const Eigen::Index n = x.size();
  return attach(tape, {1}, std::move(out), [nx, n](const Array& g, Tape& t) {
    if (nx >= 0)
      t.accumulate(nx, Array::Constant(n, g[0] / static_cast<double>(n)));
  });
}

Tensor stddev(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("stddev: empty tensor");
  const Eigen::Index n = x.size();
  const double mu = x.data.mean();
  const Array centered = x.data - mu;
  const double var = centered.square().mean();
  const double sd = std::sqrt(var);
  Array out(1);
  out[0] = sd;
  Tape* tape = result_tape(x);
  if (!tape) return Tensor({1}, std::move(out));
  const int nx = x.node;
  return attach(tape, {1}, std::move(out),
                [nx, n, sd, centered](const Array& g, Tape& t) {
                  if (nx < 0) return;
                  if (sd <= 0.0) {
                    t.accumulate(nx, Array::Zero(n));
                    return;
                  }
                  t.accumulate(nx, Array(g[0] * centered /
                                         (static_cast<double>(n) * sd)));
                });
}

namespace {

Array flip_cols(const Array& v, int c, int h, int w) {
  Array out(v.size());
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        out[(static_cast<Eigen::Index>(ch) * h + i) * w + j] =
            v[(static_cast<Eigen::Index>(ch) * h + i) * w + (w - 1 - j)];
  return out;
}

}  // namespace

Tensor flip_lr(const Tensor& x) {
  int c, h, w;
  if (x.rank() == 2) {
    c = 1, h = x.shape[0], w = x.shape[1];
  } else if (x.rank() == 3) {
    c = x.shape[0], h = x.shape[1], w = x.shape[2];
  } else {
    throw ShapeError("flip_lr: rank-2 or rank-3 (channel-leading) only");
  }
  Array out = flip_cols(x.data, c, h, w);
  Tape* tape = result_tape(x);
  if (!tape) return Tensor(x.shape, std::move(out));
  const int nx = x.node;
  return attach(tape, x.shape, std::move(out),
                [nx, c, h, w](const Array& g, Tape& t) {
                  if (nx >= 0) t.accumulate(nx, flip_cols(g, c, h, w));
                });
}

Tensor stop_gradient(const Tensor& x) {
  Tape* tape = result_tape(x);
  if (!tape) return Tensor(x.shape, x.data);
  Tensor out(x.shape, x.data);
  out.tape = tape;
  out.node = tape->add_node(Tape::Backprop{}, /*detached=*/true);
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size())
    throw ShapeError("reshape: element count changes");
  Tape* tape = result_tape(x);
  if (!tape) return Tensor(std::move(shape), x.data);
  const int nx = x.node;
  return attach(tape, std::move(shape), x.data,
                [nx](const Array& g, Tape& t) {
                  if (nx >= 0) t.accumulate(nx, g);
                });
}

Tensor slice_rows(const Tensor& x, int row0, int nrows) {
  if (x.rank() != 2) throw ShapeError("slice_rows: rank-2 only");
  const int m = x.shape[0], n = x.shape[1];
  if (row0 < 0 || nrows < 1 || row0 + nrows > m)
    throw ShapeError("slice_rows: range out of bounds");
  Array out = x.data.segment(static_cast<Eigen::Index>(row0) * n,
                             static_cast<Eigen::Index>(nrows) * n);
  Tape* tape = result_tape(x);
  if (!tape) return Tensor({nrows, n}, std::move(out));
  const int nx = x.node;
  return attach(tape, {nrows, n}, std::move(out),
                [nx, row0, nrows, m, n](const Array& g, Tape& t) {
                  if (nx < 0) return;
                  Array gx = Array::Zero(static_cast<Eigen::Index>(m) * n);
                  gx.segment(static_cast<Eigen::Index>(row0) * n,
                             static_cast<Eigen::Index>(nrows) * n) = g;
                  t.accumulate(nx, gx);
                });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[0] != b.shape[0])
    throw ShapeError("concat_cols: need rank-2 with equal row counts");
  const int m = a.shape[0], p = a.shape[1], q = b.shape[1];
  Array out(static_cast<Eigen::Index>(m) * (p + q));
  for (int i = 0; i < m; ++i) {
    out.segment(static_cast<Eigen::Index>(i) * (p + q), p) =
        a.data.segment(static_cast<Eigen::Index>(i) * p, p);
    out.segment(static_cast<Eigen::Index>(i) * (p + q) + p, q) =
        b.data.segment(static_cast<Eigen::Index>(i) * q, q);
  }
  Tape* tape = result_tape(a, b);
  if (!tape) return Tensor({m, p + q}, std::move(out));
  const int na = a.node, nb = b.node;
  return attach(tape, {m, p + q}, std::move(out),
                [na, nb, m, p, q](const Array& g, Tape& t) {
                  if (na >= 0) {
                    Array ga(static_cast<Eigen::Index>(m) * p);
                    for (int i = 0; i < m; ++i)
                      ga.segment(static_cast<Eigen::Index>(i) * p, p) =
                          g.segment(static_cast<Eigen::Index>(i) * (p + q), p);
                    t.accumulate(na, ga);
                  }
                  if (nb >= 0) {
                    Array gb(static_cast<Eigen::Index>(m) * q);
                    for (int i = 0; i < m; ++i)
                      gb.segment(static_cast<Eigen::Index>(i) * q, q) =
                          g.segment(
                              static_cast<Eigen::Index>(i) * (p + q) + p, q);
                    t.accumulate(nb, gb);
                  }
                });
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  if (x.rank() != 2) throw ShapeError("add_rowvec: rank-2 input");
  const int m = x.shape[0], n = x.shape[1];
  if (v.size() != n) throw ShapeError("add_rowvec: vector length != columns");
  Array out = x.data;
  for (int i = 0; i < m; ++i)
    out.segment(static_cast<Eigen::Index>(i) * n, n) += v.data;
  Tape* tape = result_tape(x, v);
  if (!tape) return Tensor({m, n}, std::move(out));
  const int nx = x.node, nv = v.node;
  const Eigen::Index vn = v.size();
  return attach(tape, {m, n}, std::move(out),
                [nx, nv, m, n, vn](const Array& g, Tape& t) {
                  if (nx >= 0) t.accumulate(nx, g);
                  if (nv >= 0) {
                    Array gv = Array::Zero(vn);
                    for (int i = 0; i < m; ++i)
                      gv += g.segment(static_cast<Eigen::Index>(i) * n, n);
                    t.accumulate(nv, gv);
                  }
                });
}

}  // namespace drtune
