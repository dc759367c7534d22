#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "drtune/denoiser.hpp"
#include "drtune/optimizer.hpp"
#include "drtune/rewards.hpp"
#include "drtune/sampler.hpp"

namespace drtune {

enum class StrategyKind { DRTune, DRaFT_K, DRaFT_LV, ReFL, AlignProp };

StrategyKind parse_strategy_kind(const std::string& s);
std::string to_string(StrategyKind k);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::DRTune;
  int T = 50;
  int K = 5;   // trained steps (DRTune / DRaFT_K)
  int m = 20;  // max early-stop step (DRTune / ReFL)
  bool sg_input = true;  // on by default only for DRTune; togglable
  bool alignprop_literal_suffix = false;  // {u..T} instead of {1..u}
  double lr = 2e-5;
  double clip_norm = 0.1;
  int batch = 16;
  std::uint64_t seed = 0;

  static StrategyConfig for_kind(StrategyKind kind, int T);
  void validate() const;
};

// One training iteration's trained-step set and early-stop step.
struct StepPlan {
  std::vector<int> t_train;  // ascending
  int t_min = 0;             // 0 = no early stop
  int lv_replicas = 1;

  bool trains(int t) const {
    return std::binary_search(t_train.begin(), t_train.end(), t);
  }
};

StepPlan plan_steps(const StrategyConfig& cfg, Rng& rng);

struct RunRecord {
  int iter = 0;
  double reward = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::string config_echo;
  std::vector<RunRecord> records;
};

struct RolloutResult {
  Tensor x0;      // [batch, npix]
  Tensor reward;  // scalar, on tape
};

// Unrolled sampling chain with the plan's gradient-flow policy applied,
// ending in the batch-mean reward. bind supplies the (possibly LoRA)
// weight view whose leaves receive gradients.
RolloutResult rollout(const Denoiser& model, const Binding& bind,
                      const SamplerCoeffs& coeffs, const NoiseSchedule& sched,
                      const StepPlan& plan, const StrategyConfig& cfg,
                      const BatchReward& reward, Rng& rng);

// No-gradient sampling for evaluation; adapter may be null.
Array sample_batch(const Denoiser& model, LoRAAdapter* adapter,
                   const SamplerCoeffs& coeffs, const NoiseSchedule& sched,
                   int batch, Rng& rng);

struct TrainOptions {
  int iters = 500;
  double budget_seconds = 0.0;  // > 0: stop when exceeded
  bool maximize = true;
  double weight_decay = 0.01;
};

// Alg-1-style outer loop: plan, rollout, clip + AdamW on the adapter.
// Base weights are never touched.
RunLog train_reward(const Denoiser& model, LoRAAdapter& adapter,
                    const NoiseSchedule& sched, const SamplerCoeffs& coeffs,
                    const StrategyConfig& cfg, const BatchReward& reward,
                    const TrainOptions& opt);

}  // namespace drtune
