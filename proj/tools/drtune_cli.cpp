#include <CLI11.hpp>
#include <iostream>

#include "drtune/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  double budget_seconds = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory override");
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--budget-seconds", args.budget_seconds,
                  "wall-clock budget override (switches budget.mode)");
}

drtune::ExperimentConfig resolve(const CommonArgs& args) {
  drtune::ExperimentConfig cfg = drtune::load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.budget_seconds >= 0.0) {
    cfg.budget_mode = drtune::BudgetMode::seconds;
    cfg.budget_seconds = args.budget_seconds;
  }
  cfg.strategy.seed = cfg.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reward tuning lab for toy diffusion models"};
  app.require_subcommand(1);

  CommonArgs pretrain_args, tune_args, compare_args, ablate_args;
  std::string ablate_axis = "K";

  CLI::App* pretrain = app.add_subcommand("pretrain", "train the base denoiser");
  add_common(pretrain, pretrain_args);
  CLI::App* tune = app.add_subcommand("tune", "reward-tune one strategy");
  add_common(tune, tune_args);
  CLI::App* compare =
      app.add_subcommand("compare", "run all five strategies, one budget");
  add_common(compare, compare_args);
  CLI::App* ablate = app.add_subcommand("ablate", "sweep K/T or m/T ratios");
  add_common(ablate, ablate_args);
  ablate->add_option("--axis", ablate_axis, "sweep axis: K or m")
      ->check(CLI::IsMember({"K", "m"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (pretrain->parsed()) {
      drtune::cmd_pretrain(resolve(pretrain_args));
    } else if (tune->parsed()) {
      drtune::cmd_tune(resolve(tune_args));
    } else if (compare->parsed()) {
      drtune::cmd_compare(resolve(compare_args));
    } else if (ablate->parsed()) {
      drtune::cmd_ablate(resolve(ablate_args), ablate_axis == "K"
                                                   ? drtune::AblateAxis::K
                                                   : drtune::AblateAxis::m);
    }
  } catch (const drtune::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
