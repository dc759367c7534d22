#pragma once

#include <functional>
#include <string>

#include "drtune/dataset.hpp"
#include "drtune/denoiser.hpp"
#include "drtune/ops.hpp"

namespace drtune {

enum class RewardKind { symmetry, compressibility, brightness, toy_classifier };

RewardKind parse_reward_kind(const std::string& s);
std::string to_string(RewardKind k);

struct RewardSpec {
  RewardKind kind = RewardKind::brightness;
  bool maximize = true;       // symmetry/compressibility default to false
  int dct_keep = 4;           // compressibility: kept k x k low-frequency block
  double eps_std = 1e-4;      // symmetry: std denominator guard
  int target_class = 0;       // toy_classifier
  std::string classifier_path;

  static RewardSpec for_kind(RewardKind kind);
};

// Asymmetry score: meanAbs(I - flip_lr(I)) / (std(I) + eps_std). Lower
// is more symmetric; zero for any mirror-symmetric or constant image.
Tensor symmetry_reward(const Tensor& image, double eps_std = 1e-4);

// Reconstruction error through an orthonormal 2-D DCT-II truncated to
// the top-left k x k coefficient block; mean squared error.
Tensor compress_error(const Tensor& image, int k);

Tensor brightness_reward(const Tensor& image);

// Frozen MLP classifier over flattened pixels.
struct Classifier {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  int hidden = 64;
  Mlp mlp;

  int npix() const { return height * width; }
  // x: [batch, npix]; returns [batch, num_classes] logits.
  Tensor logits(const Binding& bind, const Tensor& x) const;
};

Classifier train_toy_classifier(const ToyDataset& ds, int iters, double lr,
                                std::uint64_t seed);
void save_classifier(const std::string& path, const Classifier& clf);
Classifier load_classifier(const std::string& path);

// Mean target-class logit; clf parameters stay off the tape.
Tensor toy_classifier_reward(const Tensor& image_batch, int target_class,
                             const Classifier& clf);

// Batch reward: image_batch is [batch, h*w]; returns the scalar mean of
// the per-image reward. Used as the rollout's objective.
using BatchReward = std::function<Tensor(const Tensor& image_batch)>;

BatchReward make_batch_reward(const RewardSpec& spec, int height, int width,
                              const Classifier* clf = nullptr);

}  // namespace drtune
