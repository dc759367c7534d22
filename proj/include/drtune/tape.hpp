#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "drtune/error.hpp"

namespace drtune {

using Array = Eigen::ArrayXd;
using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<int>;

inline Eigen::Index numel(const Shape& shape) {
  Eigen::Index n = 1;
  for (int d : shape) n *= d;
  return n;
}

class Tape;

// Dense tensor of 64-bit reals, flat row-major. A tensor either lives on
// a gradient tape (node >= 0) or is a constant (node == -1, tape null).
struct Tensor {
  Shape shape;
  Array data;
  Tape* tape = nullptr;
  int node = -1;

  Tensor() = default;
  Tensor(Shape s, Array d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != data.size())
      throw ShapeError("tensor shape does not match data length");
  }

  bool on_tape() const { return node >= 0; }
  int rank() const { return static_cast<int>(shape.size()); }
  Eigen::Index size() const { return data.size(); }

  double scalar() const {
    if (data.size() != 1) throw ShapeError("scalar() on non-scalar tensor");
    return data[0];
  }
};

inline Tensor constant(Shape shape, Array data) {
  return Tensor(std::move(shape), std::move(data));
}

inline Tensor constant_scalar(double v) {
  Array a(1);
  a[0] = v;
  return Tensor({1}, a);
}

// Reverse-mode gradient tape. Nodes are appended in topological order;
// backward() walks them in reverse, invoking each node's accumulation
// rule. A detached node blocks all gradient flow through its edge.
class Tape {
 public:
  // Accumulates d(loss)/d(inputs) given d(loss)/d(output).
  using Backprop = std::function<void(const Array& gout, Tape& tape)>;

  struct Node {
    Backprop backprop;  // empty for leaves and detached nodes
    bool detached = false;
  };

  int add_node(Backprop bp, bool detached = false) {
    nodes_.push_back(Node{std::move(bp), detached});
    grads_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Trainable leaf: gradients accumulate into its buffer during backward.
  Tensor leaf(Shape shape, Array data) {
    Tensor t(std::move(shape), std::move(data));
    t.tape = this;
    t.node = add_node(Backprop{});
    return t;
  }

  void accumulate(int node, const Array& g) {
    Array& buf = grads_[node];
    if (buf.size() == 0)
      buf = g;
    else
      buf += g;
  }

  // Gradient of the last backward()'s loss w.r.t. the given tensor;
  // zeros if the tensor was unreachable from the loss.
  Array grad(const Tensor& t) const {
    if (!t.on_tape() || t.tape != this)
      throw ValueError("grad() of a tensor not on this tape");
    const Array& g = grads_[t.node];
    if (g.size() == 0) return Array::Zero(t.size());
    return g;
  }

  void backward(const Tensor& loss) {
    if (loss.data.size() != 1) throw ShapeError("backward() needs a scalar loss");
    if (!loss.on_tape() || loss.tape != this)
      throw ValueError("backward() loss is not on this tape");
    for (auto& g : grads_) g.resize(0);
    Array seed(1);
    seed[0] = 1.0;
    grads_[loss.node] = seed;
    for (int i = loss.node; i >= 0; --i) {
      const Node& n = nodes_[i];
      if (n.detached || !n.backprop) continue;
      if (grads_[i].size() == 0) continue;
      n.backprop(grads_[i], *this);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  std::vector<Array> grads_;
};

// Picks the tape a result should live on: the tape of any on-tape input.
inline Tape* result_tape(const Tensor& a) { return a.on_tape() ? a.tape : nullptr; }
inline Tape* result_tape(const Tensor& a, const Tensor& b) {
  if (a.on_tape() && b.on_tape() && a.tape != b.tape)
    throw ValueError("operands live on different tapes");
  return a.on_tape() ? a.tape : (b.on_tape() ? b.tape : nullptr);
}

}  // namespace drtune
