#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drtune/ops.hpp"
#include "drtune/rng.hpp"

namespace drtune {

// Named parameter block; the unit of checkpointing and optimization.
struct ParamBlock {
  std::string name;
  Shape shape;
  Array value;
};

// Plain fully connected stack: silu hidden layers, linear output.
// Weights are stored [in, out] so the forward pass is x * W + b.
struct Mlp {
  std::vector<int> dims;
  std::vector<ParamBlock> params;  // w0, b0, w1, b1, ...

  int layer_count() const { return static_cast<int>(dims.size()) - 1; }
  ParamBlock& weight(int l) { return params[2 * l]; }
  ParamBlock& bias(int l) { return params[2 * l + 1]; }
  const ParamBlock& weight(int l) const { return params[2 * l]; }
  const ParamBlock& bias(int l) const { return params[2 * l + 1]; }

  static Mlp create(std::vector<int> dims, Rng& rng);
};

// Low-rank adapter pair (A: rank x in, B: out x rank) per weight matrix.
// W_eff = W + scale * (B A)^T in the [in, out] storage convention; B is
// zero-initialized so a fresh adapter reproduces the base model exactly.
struct LoRAAdapter {
  int rank = 0;
  double scale = 1.0;
  std::vector<ParamBlock> a;
  std::vector<ParamBlock> b;

  static LoRAAdapter create(const Mlp& mlp, int rank, double scale, Rng& rng);
};

// Per-tape view of an Mlp: effective weight tensors plus the list of
// trainable leaves whose gradients feed the optimizer.
struct Binding {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  std::vector<ParamBlock*> trainable;
  std::vector<Tensor> leaves;  // parallel to trainable
};

// All parameters trainable (pretraining) when tape != nullptr, or a
// fully frozen constant view when tape == nullptr.
Binding bind_base(Tape* tape, Mlp& mlp);
Binding bind_frozen(const Mlp& mlp);

// Base weights frozen; only adapter A/B become tape leaves.
Binding bind_lora(Tape& tape, const Mlp& mlp, LoRAAdapter& adapter);

// Numeric W + scale * (B A)^T merge, for inference without a tape.
Mlp merge_lora(const Mlp& mlp, const LoRAAdapter& adapter);

Tensor mlp_forward(const Binding& bind, const Tensor& x);

// Time-conditioned epsilon model on flattened pixels.
struct Denoiser {
  int height = 0;
  int width = 0;
  int temb_dim = 32;
  int hidden = 256;
  Mlp mlp;

  int npix() const { return height * width; }
  Array time_embedding(int t) const;

  // x: [batch, npix] on (or off) tape; returns eps_hat of the same shape.
  Tensor forward(const Binding& bind, const Tensor& x, int t) const;

  static Denoiser create(int height, int width, int temb_dim, int hidden,
                         Rng& rng);
};

}  // namespace drtune
