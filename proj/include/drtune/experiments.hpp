#pragma once

#include "drtune/config.hpp"
#include "drtune/pretrain.hpp"
#include "drtune/reports.hpp"

namespace drtune {

NoiseSchedule make_schedule(const ExperimentConfig& cfg);
SamplerCoeffs make_coeffs(const ExperimentConfig& cfg,
                          const NoiseSchedule& sched);

// Mean reward over freshly sampled batches (no gradients).
double eval_reward_on_samples(const Denoiser& model, LoRAAdapter* adapter,
                              const SamplerCoeffs& coeffs,
                              const NoiseSchedule& sched,
                              const BatchReward& reward, int batches, int batch,
                              std::uint64_t seed);

struct TuneResult {
  LoRAAdapter adapter;
  RunLog log;
  double initial_value = 0.0;  // reward of the base model's samples
  double final_value = 0.0;    // reward of the tuned model's samples
};

// One strategy run against a pretrained model; shared by tune, compare
// and the ablation sweeps.
TuneResult run_tuning(const ExperimentConfig& cfg, const Denoiser& model,
                      const StrategyConfig& strat, const BatchReward& reward);

struct CompareResult {
  std::vector<StrategyKind> kinds;
  std::vector<RunLog> logs;
  double initial_value = 0.0;
  std::vector<double> final_values;
};

struct AblateResult {
  std::vector<double> ratios;
  std::vector<double> final_values;
  std::vector<RunLog> logs;
};

enum class AblateAxis { K, m };

CompareResult run_compare(const ExperimentConfig& cfg, const Denoiser& model,
                          const BatchReward& reward);
AblateResult run_ablation(const ExperimentConfig& cfg, const Denoiser& model,
                          AblateAxis axis);

// CLI entry points; write artifacts under cfg.out_dir.
void cmd_pretrain(const ExperimentConfig& cfg);
void cmd_tune(const ExperimentConfig& cfg);
void cmd_compare(const ExperimentConfig& cfg);
void cmd_ablate(const ExperimentConfig& cfg, AblateAxis axis);

// Sweep parallelism cap from DRTUNE_THREADS (>= 1).
int sweep_thread_cap();

}  // namespace drtune
