#include "drtune/rewards.hpp"

#include <cmath>

#include "drtune/checkpoint.hpp"
#include "drtune/optimizer.hpp"

namespace drtune {

RewardKind parse_reward_kind(const std::string& s) {
  if (s == "symmetry") return RewardKind::symmetry;
  if (s == "compressibility") return RewardKind::compressibility;
  if (s == "brightness") return RewardKind::brightness;
  if (s == "toy_classifier") return RewardKind::toy_classifier;
  throw ConfigError("unknown reward kind: " + s);
}

std::string to_string(RewardKind k) {
  switch (k) {
    case RewardKind::symmetry: return "symmetry";
    case RewardKind::compressibility: return "compressibility";
    case RewardKind::brightness: return "brightness";
    case RewardKind::toy_classifier: return "toy_classifier";
  }
  return "?";
}

RewardSpec RewardSpec::for_kind(RewardKind kind) {
  RewardSpec spec;
  spec.kind = kind;
  spec.maximize =
      !(kind == RewardKind::symmetry || kind == RewardKind::compressibility);
  return spec;
}

Tensor symmetry_reward(const Tensor& image, double eps_std) {
  if (image.rank() < 2 || image.shape[image.rank() - 1] < 2 ||
      image.shape[image.rank() - 2] < 2)
    throw ShapeError("symmetry_reward: need h, w >= 2");
  Tensor diff = abs(sub(image, flip_lr(image)));
  return div(mean(diff), add(stddev(image), eps_std));
}

namespace {

// Orthonormal DCT-II basis, [n, n].
Array dct_matrix(int n) {
  Array d(static_cast<Eigen::Index>(n) * n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    const double c = i == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int j = 0; j < n; ++j)
      d[static_cast<Eigen::Index>(i) * n + j] =
          c * std::cos(pi * (2 * j + 1) * i / (2.0 * n));
  }
  return d;
}

}  // namespace

Tensor compress_error(const Tensor& image, int k) {
  if (image.rank() != 2) throw ShapeError("compress_error: rank-2 image");
  const int h = image.shape[0], w = image.shape[1];
  if (k < 1 || k > std::min(h, w))
    throw ValueError("compress_error: k outside [1, min(h,w)]");
  Tensor dh = constant({h, h}, dct_matrix(h));
  Tensor dw = constant({w, w}, dct_matrix(w));
  Tensor coeffs = matmul(matmul(dh, image), transpose(dw));
  Array mask_data = Array::Zero(static_cast<Eigen::Index>(h) * w);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      mask_data[static_cast<Eigen::Index>(i) * w + j] = 1.0;
  Tensor kept = mul(coeffs, constant({h, w}, std::move(mask_data)));
  Tensor recon = matmul(matmul(transpose(dh), kept), dw);
  return mean(square(sub(image, recon)));
}

Tensor brightness_reward(const Tensor& image) { return mean(image); }

Tensor Classifier::logits(const Binding& bind, const Tensor& x) const {
  if (x.rank() != 2 || x.shape[1] != npix())
    throw ShapeError("Classifier::logits: input resolution mismatch");
  return mlp_forward(bind, x);
}

Classifier train_toy_classifier(const ToyDataset& ds, int iters, double lr,
                                std::uint64_t seed) {
  Rng rng(seed);
  Classifier clf;
  clf.height = ds.height;
  clf.width = ds.width;
  clf.num_classes = ds.num_classes;
  clf.mlp = Mlp::create({ds.npix(), clf.hidden, clf.num_classes}, rng);

  const int batch = 32;
  AdamWConfig opt;
  opt.lr = lr;
  opt.clip_norm = 0.0;
  opt.weight_decay = 0.0;
  AdamWState state;
  const int n = static_cast<int>(ds.images.size());
  for (int it = 0; it < iters; ++it) {
    Array xb(static_cast<Eigen::Index>(batch) * ds.npix());
    Array yb = Array::Zero(static_cast<Eigen::Index>(batch) * clf.num_classes);
    for (int i = 0; i < batch; ++i) {
      const int idx = rng.randint(0, n - 1);
      xb.segment(static_cast<Eigen::Index>(i) * ds.npix(), ds.npix()) =
          ds.images[idx];
      yb[static_cast<Eigen::Index>(i) * clf.num_classes + ds.labels[idx]] = 1.0;
    }
    Tape tape;
    Binding bind = bind_base(&tape, clf.mlp);
    Tensor logits = clf.logits(bind, constant({batch, ds.npix()}, xb));
    // MSE to one-hot targets; adequate for the toy label task.
    Tensor loss =
        mean(square(sub(logits, constant({batch, clf.num_classes}, yb))));
    tape.backward(loss);
    std::vector<Array> grads;
    for (const Tensor& leaf : bind.leaves) grads.push_back(tape.grad(leaf));
    clip_and_step(bind.trainable, std::move(grads), state, opt);
  }
  return clf;
}

void save_classifier(const std::string& path, const Classifier& clf) {
  std::vector<ParamBlock> blocks;
  Array meta(4);
  meta << clf.height, clf.width, clf.num_classes, clf.hidden;
  blocks.push_back(ParamBlock{"__meta__", {4}, meta});
  for (const ParamBlock& p : clf.mlp.params) blocks.push_back(p);
  save_blocks(path, blocks);
}

Classifier load_classifier(const std::string& path) {
  const auto blocks = load_blocks(path);
  Classifier clf;
  bool have_meta = false;
  for (const ParamBlock& b : blocks) {
    if (b.name == "__meta__") {
      if (b.value.size() != 4) throw IoError("bad classifier meta block");
      clf.height = static_cast<int>(b.value[0]);
      clf.width = static_cast<int>(b.value[1]);
      clf.num_classes = static_cast<int>(b.value[2]);
      clf.hidden = static_cast<int>(b.value[3]);
      have_meta = true;
    }
  }
  if (!have_meta) throw IoError("checkpoint missing block: __meta__");
  clf.mlp.dims = {clf.npix(), clf.hidden, clf.num_classes};
  for (int l = 0; l < 2; ++l) {
    const std::string wn = "w" + std::to_string(l);
    const std::string bn = "b" + std::to_string(l);
    for (const ParamBlock& b : blocks) {
      if (b.name == wn || b.name == bn) clf.mlp.params.push_back(b);
    }
  }
  if (clf.mlp.params.size() != 4) throw IoError("classifier blocks incomplete");
  return clf;
}

Tensor toy_classifier_reward(const Tensor& image_batch, int target_class,
                             const Classifier& clf) {
  if (target_class < 0 || target_class >= clf.num_classes)
    throw ValueError("toy_classifier_reward: target class out of range");
  Binding frozen = bind_frozen(clf.mlp);
  Tensor logits = clf.logits(frozen, image_batch);
  const int batch = image_batch.shape[0];
  Array mask_data =
      Array::Zero(static_cast<Eigen::Index>(batch) * clf.num_classes);
  for (int i = 0; i < batch; ++i)
    mask_data[static_cast<Eigen::Index>(i) * clf.num_classes + target_class] =
        1.0;
  Tensor picked = mul(logits, constant({batch, clf.num_classes}, mask_data));
  return mul(sum(picked), 1.0 / batch);
}

BatchReward make_batch_reward(const RewardSpec& spec, int height, int width,
                              const Classifier* clf) {
  if (spec.kind == RewardKind::toy_classifier) {
    if (!clf) throw ValueError("toy_classifier reward needs a classifier");
    Classifier copy = *clf;
    const int target = spec.target_class;
    return [copy, target](const Tensor& batch) {
      return toy_classifier_reward(batch, target, copy);
    };
  }
  if (spec.kind == RewardKind::brightness) {
    return [](const Tensor& batch) { return brightness_reward(batch); };
  }
  const RewardSpec s = spec;
  return [s, height, width](const Tensor& batch) {
    const int n = batch.shape[0];
    Tensor acc = constant_scalar(0.0);
    for (int i = 0; i < n; ++i) {
      Tensor img = reshape(slice_rows(batch, i, 1), {height, width});
      Tensor r = s.kind == RewardKind::symmetry
                     ? symmetry_reward(img, s.eps_std)
                     : compress_error(img, s.dct_keep);
      acc = add(acc, r);
    }
    return mul(acc, 1.0 / n);
  };
}

}  // namespace drtune
