#pragma once

#include <string>

#include "drtune/dataset.hpp"
#include "drtune/rewards.hpp"
#include "drtune/strategy.hpp"

namespace drtune {

enum class BudgetMode { iterations, seconds };

// Whole-experiment configuration; round-trips losslessly through the
// line-oriented `key = value` file format (dotted keys, '#' comments,
// unknown keys rejected).
struct ExperimentConfig {
  DatasetKind dataset_kind = DatasetKind::shapes;
  int dataset_size = 4096;
  int dataset_res = 16;

  int pretrain_iters = 4000;
  double pretrain_lr = 1e-3;
  int pretrain_batch = 64;

  int T = 50;
  double beta_start = 1e-4;
  double beta_end = 0.2;
  std::string sampler = "ddpm";  // ddpm | ddim
  double ddim_eta = 0.0;

  int model_hidden = 256;
  int model_temb = 32;

  int lora_rank = 8;
  double lora_scale = 0.7;

  StrategyConfig strategy;
  RewardSpec reward;

  BudgetMode budget_mode = BudgetMode::iterations;
  int budget_iters = 500;
  double budget_seconds = 120.0;

  std::string checkpoint;       // pretrained denoiser (tune/compare/ablate)
  std::string classifier_path;  // optional, toy_classifier reward
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace drtune
