#include "drtune/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace drtune {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + v);
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("bad boolean value for " + key + ": " + v);
}

std::string fmt_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "dataset.kind") c.dataset_kind = parse_dataset_kind(v);
  else if (key == "dataset.size") c.dataset_size = static_cast<int>(parse_int(key, v));
  else if (key == "dataset.res") c.dataset_res = static_cast<int>(parse_int(key, v));
  else if (key == "pretrain.iters") c.pretrain_iters = static_cast<int>(parse_int(key, v));
  else if (key == "pretrain.lr") c.pretrain_lr = parse_double(key, v);
  else if (key == "pretrain.batch") c.pretrain_batch = static_cast<int>(parse_int(key, v));
  else if (key == "schedule.steps") c.T = static_cast<int>(parse_int(key, v));
  else if (key == "schedule.beta_start") c.beta_start = parse_double(key, v);
  else if (key == "schedule.beta_end") c.beta_end = parse_double(key, v);
  else if (key == "sampler.kind") {
    if (v != "ddpm" && v != "ddim") throw ConfigError("sampler.kind must be ddpm or ddim");
    c.sampler = v;
  } else if (key == "sampler.eta") c.ddim_eta = parse_double(key, v);
  else if (key == "model.hidden") c.model_hidden = static_cast<int>(parse_int(key, v));
  else if (key == "model.temb_dim") c.model_temb = static_cast<int>(parse_int(key, v));
  else if (key == "lora.rank") c.lora_rank = static_cast<int>(parse_int(key, v));
  else if (key == "lora.scale") c.lora_scale = parse_double(key, v);
  else if (key == "strategy.kind") c.strategy.kind = parse_strategy_kind(v);
  else if (key == "strategy.K") c.strategy.K = static_cast<int>(parse_int(key, v));
  else if (key == "strategy.m") c.strategy.m = static_cast<int>(parse_int(key, v));
  else if (key == "strategy.sg_input") c.strategy.sg_input = parse_bool(key, v);
  else if (key == "strategy.alignprop_literal") c.strategy.alignprop_literal_suffix = parse_bool(key, v);
  else if (key == "strategy.lr") c.strategy.lr = parse_double(key, v);
  else if (key == "strategy.clip_norm") c.strategy.clip_norm = parse_double(key, v);
  else if (key == "strategy.batch") c.strategy.batch = static_cast<int>(parse_int(key, v));
  else if (key == "reward.kind") c.reward.kind = parse_reward_kind(v);
  else if (key == "reward.direction") {
    if (v == "maximize") c.reward.maximize = true;
    else if (v == "minimize") c.reward.maximize = false;
    else throw ConfigError("reward.direction must be maximize or minimize");
  } else if (key == "reward.dct_keep") c.reward.dct_keep = static_cast<int>(parse_int(key, v));
  else if (key == "reward.eps_std") c.reward.eps_std = parse_double(key, v);
  else if (key == "reward.target_class") c.reward.target_class = static_cast<int>(parse_int(key, v));
  else if (key == "budget.mode") {
    if (v == "iterations") c.budget_mode = BudgetMode::iterations;
    else if (v == "seconds") c.budget_mode = BudgetMode::seconds;
    else throw ConfigError("budget.mode must be iterations or seconds");
  } else if (key == "budget.iters") c.budget_iters = static_cast<int>(parse_int(key, v));
  else if (key == "budget.seconds") c.budget_seconds = parse_double(key, v);
  else if (key == "checkpoint") c.checkpoint = v;
  else if (key == "classifier") c.classifier_path = v;
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
  else throw ConfigError("unknown config key: " + key);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset_size < 1) throw ConfigError("dataset.size must be >= 1");
  if (sampler != "ddpm" && sampler != "ddim")
    throw ConfigError("sampler.kind must be ddpm or ddim");
  if (T < 2) throw ConfigError("schedule.steps must be >= 2");
  if (lora_rank < 1) throw ConfigError("lora.rank must be >= 1");
  StrategyConfig s = strategy;
  s.T = T;
  s.validate();
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool saw_k = false, saw_m = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (key == "strategy.K") saw_k = true;
    if (key == "strategy.m") saw_m = true;
    apply(cfg, key, value);
  }
  // K and m default to fractions of the configured step count.
  if (!saw_k)
    cfg.strategy.K = std::max(1, static_cast<int>(std::lround(0.1 * cfg.T)));
  if (!saw_m)
    cfg.strategy.m = std::max(1, static_cast<int>(std::lround(0.4 * cfg.T)));
  if (cfg.strategy.kind == StrategyKind::DRaFT_LV && !saw_k) cfg.strategy.K = 1;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "dataset.kind = " << to_string(c.dataset_kind) << "\n";
  os << "dataset.size = " << c.dataset_size << "\n";
  os << "dataset.res = " << c.dataset_res << "\n";
  os << "pretrain.iters = " << c.pretrain_iters << "\n";
  os << "pretrain.lr = " << fmt_double(c.pretrain_lr) << "\n";
  os << "pretrain.batch = " << c.pretrain_batch << "\n";
  os << "schedule.steps = " << c.T << "\n";
  os << "schedule.beta_start = " << fmt_double(c.beta_start) << "\n";
  os << "schedule.beta_end = " << fmt_double(c.beta_end) << "\n";
  os << "sampler.kind = " << c.sampler << "\n";
  os << "sampler.eta = " << fmt_double(c.ddim_eta) << "\n";
  os << "model.hidden = " << c.model_hidden << "\n";
  os << "model.temb_dim = " << c.model_temb << "\n";
  os << "lora.rank = " << c.lora_rank << "\n";
  os << "lora.scale = " << fmt_double(c.lora_scale) << "\n";
  os << "strategy.kind = " << to_string(c.strategy.kind) << "\n";
  os << "strategy.K = " << c.strategy.K << "\n";
  os << "strategy.m = " << c.strategy.m << "\n";
  os << "strategy.sg_input = " << (c.strategy.sg_input ? "true" : "false") << "\n";
  os << "strategy.alignprop_literal = "
     << (c.strategy.alignprop_literal_suffix ? "true" : "false") << "\n";
  os << "strategy.lr = " << fmt_double(c.strategy.lr) << "\n";
  os << "strategy.clip_norm = " << fmt_double(c.strategy.clip_norm) << "\n";
  os << "strategy.batch = " << c.strategy.batch << "\n";
  os << "reward.kind = " << to_string(c.reward.kind) << "\n";
  os << "reward.direction = " << (c.reward.maximize ? "maximize" : "minimize") << "\n";
  os << "reward.dct_keep = " << c.reward.dct_keep << "\n";
  os << "reward.eps_std = " << fmt_double(c.reward.eps_std) << "\n";
  os << "reward.target_class = " << c.reward.target_class << "\n";
  os << "budget.mode = "
     << (c.budget_mode == BudgetMode::iterations ? "iterations" : "seconds") << "\n";
  os << "budget.iters = " << c.budget_iters << "\n";
  os << "budget.seconds = " << fmt_double(c.budget_seconds) << "\n";
  if (!c.checkpoint.empty()) os << "checkpoint = " << c.checkpoint << "\n";
  if (!c.classifier_path.empty()) os << "classifier = " << c.classifier_path << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  os << "seed = " << c.seed << "\n";
  return os.str();
}

}  // namespace drtune
