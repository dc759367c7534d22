#include "drtune/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "drtune/checkpoint.hpp"

namespace drtune {

namespace fs = std::filesystem;

NoiseSchedule make_schedule(const ExperimentConfig& cfg) {
  return build_linear_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
}

SamplerCoeffs make_coeffs(const ExperimentConfig& cfg,
                          const NoiseSchedule& sched) {
  if (cfg.sampler == "ddpm") return ddpm_coeffs(sched);
  return ddim_coeffs(sched, cfg.ddim_eta);
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " +
                        ec.message());
}

struct RewardBundle {
  RewardSpec spec;
  std::optional<Classifier> clf;
  BatchReward fn;
};

RewardBundle make_reward_bundle(const ExperimentConfig& cfg) {
  RewardBundle bundle;
  bundle.spec = cfg.reward;
  if (cfg.reward.kind == RewardKind::toy_classifier) {
    if (!cfg.classifier_path.empty() && fs::exists(cfg.classifier_path)) {
      bundle.clf = load_classifier(cfg.classifier_path);
    } else {
      ToyDataset ds = gen_toy_dataset(cfg.dataset_kind, cfg.dataset_size,
                                      cfg.dataset_res, cfg.seed);
      bundle.clf = train_toy_classifier(ds, 1500, 1e-3, cfg.seed + 17);
      if (!cfg.classifier_path.empty())
        save_classifier(cfg.classifier_path, *bundle.clf);
    }
  }
  bundle.fn = make_batch_reward(bundle.spec, cfg.dataset_res, cfg.dataset_res,
                                bundle.clf ? &*bundle.clf : nullptr);
  return bundle;
}

TrainOptions make_train_options(const ExperimentConfig& cfg) {
  TrainOptions opt;
  opt.maximize = cfg.reward.maximize;
  if (cfg.budget_mode == BudgetMode::iterations) {
    opt.iters = cfg.budget_iters;
    opt.budget_seconds = 0.0;
  } else {
    opt.iters = std::numeric_limits<int>::max();
    opt.budget_seconds = cfg.budget_seconds;
  }
  return opt;
}

}  // namespace

double eval_reward_on_samples(const Denoiser& model, LoRAAdapter* adapter,
                              const SamplerCoeffs& coeffs,
                              const NoiseSchedule& sched,
                              const BatchReward& reward, int batches, int batch,
                              std::uint64_t seed) {
  Rng rng(seed);
  double acc = 0.0;
  for (int i = 0; i < batches; ++i) {
    Array pixels = sample_batch(model, adapter, coeffs, sched, batch, rng);
    const int cols = static_cast<int>(pixels.size()) / batch;
    Tensor x0 = constant({batch, cols}, std::move(pixels));
    acc += reward(x0).scalar();
  }
  return acc / batches;
}

TuneResult run_tuning(const ExperimentConfig& cfg, const Denoiser& model,
                      const StrategyConfig& strat, const BatchReward& reward) {
  const NoiseSchedule sched = make_schedule(cfg);
  const SamplerCoeffs coeffs = make_coeffs(cfg, sched);
  const std::uint64_t eval_seed = cfg.seed ^ 0xe7a1u;

  TuneResult result;
  Rng init_rng(strat.seed + 101);
  result.adapter =
      LoRAAdapter::create(model.mlp, cfg.lora_rank, cfg.lora_scale, init_rng);
  result.initial_value = eval_reward_on_samples(
      model, nullptr, coeffs, sched, reward, 4, strat.batch, eval_seed);
  result.log = train_reward(model, result.adapter, sched, coeffs, strat, reward,
                            make_train_options(cfg));
  result.final_value =
      eval_reward_on_samples(model, &result.adapter, coeffs, sched, reward, 4,
                             strat.batch, eval_seed);
  return result;
}

CompareResult run_compare(const ExperimentConfig& cfg, const Denoiser& model,
                          const BatchReward& reward) {
  CompareResult result;
  result.kinds = {StrategyKind::DRTune, StrategyKind::DRaFT_K,
                  StrategyKind::DRaFT_LV, StrategyKind::ReFL,
                  StrategyKind::AlignProp};
  for (StrategyKind kind : result.kinds) {
    StrategyConfig strat = StrategyConfig::for_kind(kind, cfg.T);
    // The comparison pits DRTune against the shallow-supervision variant
    // of DRaFT, which trains only the final step.
    if (kind == StrategyKind::DRaFT_K) strat.K = 1;
    strat.lr = cfg.strategy.lr;
    strat.clip_norm = cfg.strategy.clip_norm;
    strat.batch = cfg.strategy.batch;
    strat.seed = cfg.seed;
    TuneResult tr = run_tuning(cfg, model, strat, reward);
    result.initial_value = tr.initial_value;
    result.final_values.push_back(tr.final_value);
    result.logs.push_back(std::move(tr.log));
  }
  return result;
}

int sweep_thread_cap() {
  const char* env = std::getenv("DRTUNE_THREADS");
  if (!env) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  try {
    std::size_t pos = 0;
    const int n = std::stoi(env, &pos);
    if (pos != std::string(env).size() || n < 1) throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad DRTUNE_THREADS value: ") + env);
  }
}

AblateResult run_ablation(const ExperimentConfig& cfg, const Denoiser& model,
                          AblateAxis axis) {
  AblateResult result;
  result.ratios = axis == AblateAxis::K
                      ? std::vector<double>{0.02, 0.05, 0.1, 0.2, 0.4, 1.0}
                      : std::vector<double>{0.1, 0.2, 0.4, 0.6, 0.8};
  const int points = static_cast<int>(result.ratios.size());
  result.final_values.assign(points, 0.0);
  result.logs.assign(points, RunLog{});

  std::vector<std::exception_ptr> errors(points);
  auto run_point = [&](int i) {
    try {
      ExperimentConfig pcfg = cfg;
      StrategyConfig strat = StrategyConfig::for_kind(StrategyKind::DRTune, cfg.T);
      strat.lr = cfg.strategy.lr;
      strat.clip_norm = cfg.strategy.clip_norm;
      strat.batch = cfg.strategy.batch;
      strat.seed = cfg.seed + static_cast<std::uint64_t>(i) * 977;
      const int v = std::max(
          1, static_cast<int>(std::lround(result.ratios[i] * cfg.T)));
      if (axis == AblateAxis::K)
        strat.K = std::min(v, cfg.T);
      else
        strat.m = std::min(v, cfg.T);
      // Reward construction is per-thread; classifiers are trained once
      // up front by the caller via cfg.classifier_path when needed.
      RewardBundle bundle = make_reward_bundle(pcfg);
      TuneResult tr = run_tuning(pcfg, model, strat, bundle.fn);
      result.final_values[i] = tr.final_value;
      result.logs[i] = std::move(tr.log);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int cap = std::min(points, sweep_thread_cap());
  if (cap <= 1) {
    for (int i = 0; i < points; ++i) run_point(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < cap; ++w)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < points; i = next.fetch_add(1))
          run_point(i);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

void cmd_pretrain(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  ToyDataset ds = gen_toy_dataset(cfg.dataset_kind, cfg.dataset_size,
                                  cfg.dataset_res, cfg.seed);
  Rng rng(cfg.seed + 1);
  Denoiser model = Denoiser::create(cfg.dataset_res, cfg.dataset_res,
                                    cfg.model_temb, cfg.model_hidden, rng);
  const NoiseSchedule sched = make_schedule(cfg);
  PretrainOptions popt;
  popt.iters = cfg.pretrain_iters;
  popt.lr = cfg.pretrain_lr;
  popt.batch = cfg.pretrain_batch;
  PretrainLog plog = pretrain(model, ds, sched, popt, rng);

  save_denoiser(cfg.out_dir + "/denoiser.ckpt", model);
  {
    std::ofstream os(cfg.out_dir + "/pretrain_loss.csv");
    if (!os) throw IoError("write failed: " + cfg.out_dir + "/pretrain_loss.csv");
    os << "iter,loss\n";
    for (std::size_t i = 0; i < plog.loss.size(); ++i)
      os << i << "," << plog.loss[i] << "\n";
  }
  {
    std::ofstream os(cfg.out_dir + "/config_used.cfg");
    os << serialize_config(cfg);
  }
  const SamplerCoeffs coeffs = make_coeffs(cfg, sched);
  Rng srng(cfg.seed + 2);
  Array samples = sample_batch(model, nullptr, coeffs, sched, 8, srng);
  const int npix = model.npix();
  double sample_mean = 0.0;
  for (int i = 0; i < 8; ++i) {
    Array im = samples.segment(static_cast<Eigen::Index>(i) * npix, npix);
    sample_mean += im.mean() / 8.0;
    write_pgm(cfg.out_dir + "/sample_" + std::to_string(i) + ".pgm", im,
              model.height, model.width);
  }
  write_summary_csv(cfg.out_dir + "/summary.csv",
                    {{"final_loss", plog.loss.back()},
                     {"initial_loss", plog.loss.front()},
                     {"sample_pixel_mean", sample_mean},
                     {"dataset_pixel_mean", ds.pixel_mean()}});
}

namespace {

Denoiser load_model_for(const ExperimentConfig& cfg) {
  if (cfg.checkpoint.empty())
    throw ConfigError("this command needs `checkpoint = <path>`");
  if (!fs::exists(cfg.checkpoint))
    throw IoError("checkpoint not found: " + cfg.checkpoint);
  return load_denoiser(cfg.checkpoint);
}

Series log_series(const RunLog& log, bool grad_norm) {
  Series s;
  for (const RunRecord& r : log.records) {
    s.x.push_back(r.iter);
    s.y.push_back(grad_norm ? r.grad_norm : r.reward);
  }
  return s;
}

}  // namespace

void cmd_tune(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  Denoiser model = load_model_for(cfg);
  RewardBundle bundle = make_reward_bundle(cfg);
  StrategyConfig strat = cfg.strategy;
  strat.T = cfg.T;
  strat.seed = cfg.seed;
  TuneResult tr = run_tuning(cfg, model, strat, bundle.fn);

  write_metrics_csv(cfg.out_dir + "/metrics.csv", tr.log);
  write_summary_csv(cfg.out_dir + "/summary.csv",
                    {{"initial_reward", tr.initial_value},
                     {"final_reward", tr.final_value},
                     {"iterations", static_cast<double>(tr.log.records.size())}});
  Series rs = log_series(tr.log, false);
  rs.name = to_string(strat.kind);
  write_svg_plot(cfg.out_dir + "/reward.svg", "reward vs iteration",
                 "iteration", "reward", {rs});
  Series gs = log_series(tr.log, true);
  gs.name = to_string(strat.kind);
  write_svg_plot(cfg.out_dir + "/grad_norm.svg", "gradient norm vs iteration",
                 "iteration", "grad norm", {gs});
  save_adapter(cfg.out_dir + "/adapter.ckpt", tr.adapter);

  const NoiseSchedule sched = make_schedule(cfg);
  const SamplerCoeffs coeffs = make_coeffs(cfg, sched);
  Rng srng(cfg.seed + 2);
  Array samples = sample_batch(model, &tr.adapter, coeffs, sched, 8, srng);
  const int npix = model.npix();
  for (int i = 0; i < 8; ++i)
    write_pgm(cfg.out_dir + "/tuned_sample_" + std::to_string(i) + ".pgm",
              samples.segment(static_cast<Eigen::Index>(i) * npix, npix),
              model.height, model.width);
  {
    std::ofstream os(cfg.out_dir + "/config_used.cfg");
    os << serialize_config(cfg);
  }
}

void cmd_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  Denoiser model = load_model_for(cfg);
  RewardBundle bundle = make_reward_bundle(cfg);
  CompareResult cr = run_compare(cfg, model, bundle.fn);

  std::vector<std::pair<std::string, double>> summary;
  summary.emplace_back("initial", cr.initial_value);
  std::vector<Series> curves;
  for (std::size_t i = 0; i < cr.kinds.size(); ++i) {
    const std::string name = to_string(cr.kinds[i]);
    write_metrics_csv(cfg.out_dir + "/metrics_" + name + ".csv", cr.logs[i]);
    summary.emplace_back(name + "_final", cr.final_values[i]);
    Series s = log_series(cr.logs[i], false);
    s.name = name;
    curves.push_back(std::move(s));
  }
  write_summary_csv(cfg.out_dir + "/summary.csv", summary);
  write_svg_plot(cfg.out_dir + "/compare_reward.svg",
                 "strategy comparison: reward vs iteration", "iteration",
                 "reward", curves);
}

void cmd_ablate(const ExperimentConfig& cfg, AblateAxis axis) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  Denoiser model = load_model_for(cfg);
  // Classifier rewards: train once before the sweep so parallel points
  // reuse the same frozen model from disk.
  ExperimentConfig sweep_cfg = cfg;
  if (cfg.reward.kind == RewardKind::toy_classifier &&
      cfg.classifier_path.empty()) {
    sweep_cfg.classifier_path = cfg.out_dir + "/classifier.ckpt";
    make_reward_bundle(sweep_cfg);
  }
  AblateResult ar = run_ablation(sweep_cfg, model, axis);

  const std::string axis_name = axis == AblateAxis::K ? "K" : "m";
  {
    std::ofstream os(cfg.out_dir + "/ablate_" + axis_name + ".csv");
    if (!os) throw IoError("write failed: ablate csv");
    os << "ratio,final_reward\n";
    for (std::size_t i = 0; i < ar.ratios.size(); ++i)
      os << ar.ratios[i] << "," << ar.final_values[i] << "\n";
  }
  Series curve;
  curve.name = "final reward";
  curve.x = ar.ratios;
  curve.y = ar.final_values;
  write_svg_plot(cfg.out_dir + "/ablate_" + axis_name + ".svg",
                 "reward vs " + axis_name + "/T", axis_name + "/T",
                 "final reward", {curve});
  for (std::size_t i = 0; i < ar.ratios.size(); ++i) {
    std::ostringstream name;
    name << cfg.out_dir << "/metrics_" << axis_name << "_" << ar.ratios[i]
         << ".csv";
    write_metrics_csv(name.str(), ar.logs[i]);
  }
}

}  // namespace drtune
