#include "drtune/denoiser.hpp"

#include <cmath>

namespace drtune {

Mlp Mlp::create(std::vector<int> dims, Rng& rng) {
  if (dims.size() < 2) throw ValueError("Mlp::create: need at least one layer");
  Mlp mlp;
  mlp.dims = std::move(dims);
  for (int l = 0; l + 1 < static_cast<int>(mlp.dims.size()); ++l) {
    const int in = mlp.dims[l], out = mlp.dims[l + 1];
    const double sd = std::sqrt(2.0 / in);
    ParamBlock w{"w" + std::to_string(l),
                 {in, out},
                 rng.normal_array(static_cast<Eigen::Index>(in) * out) * sd};
    ParamBlock b{"b" + std::to_string(l), {out}, Array::Zero(out)};
    mlp.params.push_back(std::move(w));
    mlp.params.push_back(std::move(b));
  }
  return mlp;
}

LoRAAdapter LoRAAdapter::create(const Mlp& mlp, int rank, double scale,
                                Rng& rng) {
  if (rank < 1) throw ValueError("LoRAAdapter::create: rank must be >= 1");
  LoRAAdapter ad;
  ad.rank = rank;
  ad.scale = scale;
  for (int l = 0; l < mlp.layer_count(); ++l) {
    const int in = mlp.dims[l], out = mlp.dims[l + 1];
    const double sd = 1.0 / std::sqrt(rank);
    ad.a.push_back(ParamBlock{
        "lora_a" + std::to_string(l),
        {rank, in},
        rng.normal_array(static_cast<Eigen::Index>(rank) * in) * sd});
    ad.b.push_back(ParamBlock{"lora_b" + std::to_string(l),
                              {out, rank},
                              Array::Zero(static_cast<Eigen::Index>(out) * rank)});
  }
  return ad;
}

Binding bind_base(Tape* tape, Mlp& mlp) {
  if (!tape) return bind_frozen(mlp);
  Binding bind;
  for (int l = 0; l < mlp.layer_count(); ++l) {
    Tensor w = tape->leaf(mlp.weight(l).shape, mlp.weight(l).value);
    Tensor b = tape->leaf(mlp.bias(l).shape, mlp.bias(l).value);
    bind.weights.push_back(w);
    bind.biases.push_back(b);
    bind.trainable.push_back(&mlp.weight(l));
    bind.trainable.push_back(&mlp.bias(l));
    bind.leaves.push_back(w);
    bind.leaves.push_back(b);
  }
  return bind;
}

Binding bind_frozen(const Mlp& mlp) {
  Binding bind;
  for (int l = 0; l < mlp.layer_count(); ++l) {
    bind.weights.push_back(constant(mlp.weight(l).shape, mlp.weight(l).value));
    bind.biases.push_back(constant(mlp.bias(l).shape, mlp.bias(l).value));
  }
  return bind;
}

Binding bind_lora(Tape& tape, const Mlp& mlp, LoRAAdapter& adapter) {
  if (static_cast<int>(adapter.a.size()) != mlp.layer_count())
    throw ValueError("bind_lora: adapter layer count differs from model");
  Binding bind;
  for (int l = 0; l < mlp.layer_count(); ++l) {
    Tensor a = tape.leaf(adapter.a[l].shape, adapter.a[l].value);
    Tensor b = tape.leaf(adapter.b[l].shape, adapter.b[l].value);
    Tensor base = constant(mlp.weight(l).shape, mlp.weight(l).value);
    Tensor delta = transpose(matmul(b, a));  // [in, out]
    Tensor w_eff = add(base, mul(delta, adapter.scale));
    bind.weights.push_back(w_eff);
    bind.biases.push_back(constant(mlp.bias(l).shape, mlp.bias(l).value));
    bind.trainable.push_back(&adapter.a[l]);
    bind.trainable.push_back(&adapter.b[l]);
    bind.leaves.push_back(a);
    bind.leaves.push_back(b);
  }
  return bind;
}

Mlp merge_lora(const Mlp& mlp, const LoRAAdapter& adapter) {
  if (static_cast<int>(adapter.a.size()) != mlp.layer_count())
    throw ValueError("merge_lora: adapter layer count differs from model");
  Mlp merged = mlp;
  for (int l = 0; l < mlp.layer_count(); ++l) {
    const int in = mlp.dims[l], out = mlp.dims[l + 1];
    const int r = adapter.rank;
    Eigen::Map<const MatrixRM> ma(adapter.a[l].value.data(), r, in);
    Eigen::Map<const MatrixRM> mb(adapter.b[l].value.data(), out, r);
    Eigen::Map<MatrixRM> w(merged.weight(l).value.data(), in, out);
    w += adapter.scale * (mb * ma).transpose();
  }
  return merged;
}

Tensor mlp_forward(const Binding& bind, const Tensor& x) {
  const int layers = static_cast<int>(bind.weights.size());
  Tensor h = x;
  for (int l = 0; l < layers; ++l) {
    h = add_rowvec(matmul(h, bind.weights[l]), bind.biases[l]);
    if (l + 1 < layers) h = silu(h);
  }
  return h;
}

Array Denoiser::time_embedding(int t) const {
  Array emb(temb_dim);
  const int half = temb_dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    emb[2 * i] = std::sin(t * freq);
    emb[2 * i + 1] = std::cos(t * freq);
  }
  return emb;
}

Tensor Denoiser::forward(const Binding& bind, const Tensor& x, int t) const {
  if (x.rank() != 2 || x.shape[1] != npix())
    throw ShapeError("Denoiser::forward: input resolution mismatch");
  const int batch = x.shape[0];
  const Array emb = time_embedding(t);
  Array tiled(static_cast<Eigen::Index>(batch) * temb_dim);
  for (int i = 0; i < batch; ++i)
    tiled.segment(static_cast<Eigen::Index>(i) * temb_dim, temb_dim) = emb;
  Tensor h = concat_cols(x, constant({batch, temb_dim}, tiled));
  return mlp_forward(bind, h);
}

Denoiser Denoiser::create(int height, int width, int temb_dim, int hidden,
                          Rng& rng) {
  Denoiser d;
  d.height = height;
  d.width = width;
  d.temb_dim = temb_dim;
  d.hidden = hidden;
  const int npix = height * width;
  d.mlp = Mlp::create({npix + temb_dim, hidden, hidden, hidden, npix}, rng);
  return d;
}

}  // namespace drtune
