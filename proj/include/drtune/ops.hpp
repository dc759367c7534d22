#pragma once

#include "drtune/tape.hpp"

namespace drtune {

// Elementwise binary ops; shapes must match exactly, or use the scalar
// overloads. Results are recorded on the operands' tape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, double b);
Tensor mul(const Tensor& a, double b);

// Elementwise unary.
Tensor neg(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor silu(const Tensor& x);

// [m,k] x [k,n] -> [m,n]; dA = G B^T, dB = A^T G.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Reductions to a scalar tensor. stddev is the population standard
// deviation (divide by N); its gradient at a constant input is zero.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor stddev(const Tensor& x);

// Reverses columns of an [h,w] image (or each channel of [c,h,w]).
Tensor flip_lr(const Tensor& x);

// Identity on values; blocks all gradient flow through this edge.
Tensor stop_gradient(const Tensor& x);

// Shape plumbing. reshape keeps the flat data; slice_rows takes n
// consecutive rows of a matrix; concat_cols joins [m,p] and [m,q]
// into [m,p+q]; add_rowvec adds a length-n vector to every row.
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_rows(const Tensor& x, int row0, int nrows);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor add_rowvec(const Tensor& x, const Tensor& v);

}  // namespace drtune
