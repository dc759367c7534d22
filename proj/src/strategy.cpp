#include "drtune/strategy.hpp"

#include <chrono>
#include <numeric>
#include <sstream>

namespace drtune {

StrategyKind parse_strategy_kind(const std::string& s) {
  if (s == "drtune") return StrategyKind::DRTune;
  if (s == "draft_k") return StrategyKind::DRaFT_K;
  if (s == "draft_lv") return StrategyKind::DRaFT_LV;
  if (s == "refl") return StrategyKind::ReFL;
  if (s == "alignprop") return StrategyKind::AlignProp;
  throw ConfigError("unknown strategy kind: " + s);
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::DRTune: return "drtune";
    case StrategyKind::DRaFT_K: return "draft_k";
    case StrategyKind::DRaFT_LV: return "draft_lv";
    case StrategyKind::ReFL: return "refl";
    case StrategyKind::AlignProp: return "alignprop";
  }
  return "?";
}

StrategyConfig StrategyConfig::for_kind(StrategyKind kind, int T) {
  StrategyConfig cfg;
  cfg.kind = kind;
  cfg.T = T;
  cfg.K = std::max(1, static_cast<int>(std::lround(0.1 * T)));
  cfg.m = std::max(1, static_cast<int>(std::lround(0.4 * T)));
  cfg.sg_input = (kind == StrategyKind::DRTune);
  if (kind == StrategyKind::DRaFT_LV) cfg.K = 1;
  return cfg;
}

void StrategyConfig::validate() const {
  if (T < 1) throw ConfigError("strategy: T must be >= 1");
  if (K < 1 || K > T) throw ConfigError("strategy: need 1 <= K <= T");
  if (m < 1 || m > T) throw ConfigError("strategy: need 1 <= m <= T");
  if (kind == StrategyKind::DRaFT_LV && K != 1)
    throw ConfigError("strategy: DRaFT-LV implies K = 1");
  if (batch < 1) throw ConfigError("strategy: batch must be >= 1");
}

StepPlan plan_steps(const StrategyConfig& cfg, Rng& rng) {
  cfg.validate();
  StepPlan plan;
  switch (cfg.kind) {
    case StrategyKind::DRTune: {
      const int delta = cfg.T / cfg.K;
      const int smax = cfg.T - (cfg.K - 1) * delta;
      const int s = rng.randint(1, smax);
      for (int i = 0; i < cfg.K; ++i) plan.t_train.push_back(s + i * delta);
      plan.t_min = rng.randint(1, cfg.m);
      break;
    }
    case StrategyKind::DRaFT_K: {
      for (int t = 1; t <= cfg.K; ++t) plan.t_train.push_back(t);
      break;
    }
    case StrategyKind::DRaFT_LV: {
      plan.t_train.push_back(1);
      plan.lv_replicas = 2;
      break;
    }
    case StrategyKind::ReFL: {
      plan.t_min = rng.randint(1, cfg.m);
      plan.t_train.push_back(plan.t_min);
      break;
    }
    case StrategyKind::AlignProp: {
      const int u = rng.randint(1, cfg.T);
      if (cfg.alignprop_literal_suffix) {
        for (int t = u; t <= cfg.T; ++t) plan.t_train.push_back(t);
      } else {
        for (int t = 1; t <= u; ++t) plan.t_train.push_back(t);
      }
      break;
    }
  }
  return plan;
}

namespace {

Tensor gaussian_const(Rng& rng, int batch, int npix) {
  return constant({batch, npix},
                  rng.normal_array(static_cast<Eigen::Index>(batch) * npix));
}

// One step of the gradient-flow policy: eps_hat with optional input
// detach, then eps detach for untrained steps.
Tensor policy_eps(const Denoiser& model, const Binding& bind, const Tensor& x,
                  int t, const StepPlan& plan, const StrategyConfig& cfg) {
  Tensor in = cfg.sg_input ? stop_gradient(x) : x;
  Tensor eps_hat = model.forward(bind, in, t);
  if (!plan.trains(t)) eps_hat = stop_gradient(eps_hat);
  return eps_hat;
}

void check_reward_finite(const Tensor& r, const char* where) {
  if (!r.data.isFinite().all())
    throw ValueError(std::string("non-finite reward in ") + where);
}

}  // namespace

RolloutResult rollout(const Denoiser& model, const Binding& bind,
                      const SamplerCoeffs& coeffs, const NoiseSchedule& sched,
                      const StepPlan& plan, const StrategyConfig& cfg,
                      const BatchReward& reward, Rng& rng) {
  const int npix = model.npix();
  Tensor x = gaussian_const(rng, cfg.batch, npix);
  Tensor dummy;

  if (plan.lv_replicas > 1) {
    if (cfg.T < 2) throw ConfigError("rollout: DRaFT-LV needs T >= 2");
    for (int t = cfg.T; t >= 3; --t) {
      Tensor eps_hat = policy_eps(model, bind, x, t, plan, cfg);
      Tensor noise = coeffs.c_at(t) != 0.0 ? gaussian_const(rng, cfg.batch, npix)
                                           : dummy;
      x = sample_step(x, eps_hat, t, coeffs, noise);
    }
    // Replicate the tail with independent noise; average the rewards.
    Tensor eps2 = policy_eps(model, bind, x, 2, plan, cfg);
    Tensor acc = constant_scalar(0.0);
    Tensor x0_last;
    for (int rep = 0; rep < plan.lv_replicas; ++rep) {
      Tensor noise = coeffs.c_at(2) != 0.0
                         ? gaussian_const(rng, cfg.batch, npix)
                         : dummy;
      Tensor x1 = sample_step(x, eps2, 2, coeffs, noise);
      Tensor eps1 = policy_eps(model, bind, x1, 1, plan, cfg);
      Tensor noise1 = coeffs.c_at(1) != 0.0
                          ? gaussian_const(rng, cfg.batch, npix)
                          : dummy;
      x0_last = sample_step(x1, eps1, 1, coeffs, noise1);
      acc = add(acc, reward(x0_last));
    }
    Tensor r = mul(acc, 1.0 / plan.lv_replicas);
    check_reward_finite(r, "rollout (lv)");
    return RolloutResult{x0_last, r};
  }

  Tensor x0;
  bool stopped = false;
  for (int t = cfg.T; t >= 1; --t) {
    Tensor eps_hat = policy_eps(model, bind, x, t, plan, cfg);
    if (t == plan.t_min) {
      x0 = predict_x0(x, eps_hat, t, sched);
      stopped = true;
      break;
    }
    Tensor noise = coeffs.c_at(t) != 0.0 ? gaussian_const(rng, cfg.batch, npix)
                                         : dummy;
    x = sample_step(x, eps_hat, t, coeffs, noise);
  }
  if (!stopped) x0 = x;
  Tensor r = reward(x0);
  check_reward_finite(r, "rollout");
  return RolloutResult{x0, r};
}

Array sample_batch(const Denoiser& model, LoRAAdapter* adapter,
                   const SamplerCoeffs& coeffs, const NoiseSchedule& sched,
                   int batch, Rng& rng) {
  const int npix = model.npix();
  const Mlp merged =
      adapter ? merge_lora(model.mlp, *adapter) : model.mlp;
  const Binding bind = bind_frozen(merged);
  Tensor x = gaussian_const(rng, batch, npix);
  for (int t = sched.T; t >= 1; --t) {
    Tensor eps_hat = model.forward(bind, x, t);
    Tensor noise;
    if (coeffs.c_at(t) != 0.0) noise = gaussian_const(rng, batch, npix);
    x = sample_step(x, eps_hat, t, coeffs, noise);
  }
  return x.data;
}

RunLog train_reward(const Denoiser& model, LoRAAdapter& adapter,
                    const NoiseSchedule& sched, const SamplerCoeffs& coeffs,
                    const StrategyConfig& cfg, const BatchReward& reward,
                    const TrainOptions& opt) {
  cfg.validate();
  Rng rng(cfg.seed);
  AdamWConfig adam;
  adam.lr = cfg.lr;
  adam.clip_norm = cfg.clip_norm;
  adam.weight_decay = opt.weight_decay;
  AdamWState state;

  RunLog log;
  {
    std::ostringstream echo;
    echo << "strategy=" << to_string(cfg.kind) << " T=" << cfg.T
         << " K=" << cfg.K << " m=" << cfg.m << " sg=" << (cfg.sg_input ? 1 : 0)
         << " lr=" << cfg.lr << " clip=" << cfg.clip_norm
         << " batch=" << cfg.batch << " seed=" << cfg.seed;
    log.config_echo = echo.str();
  }

  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < opt.iters; ++it) {
    if (opt.budget_seconds > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      if (elapsed >= opt.budget_seconds) break;
    }
    const auto t0 = std::chrono::steady_clock::now();

    Tape tape;
    Binding bind = bind_lora(tape, model.mlp, adapter);
    StepPlan plan = plan_steps(cfg, rng);
    RolloutResult rr;
    try {
      rr = rollout(model, bind, coeffs, sched, plan, cfg, reward, rng);
    } catch (const Error& e) {
      throw ValueError("iteration " + std::to_string(it) + ": " + e.what());
    }
    Tensor loss = opt.maximize ? neg(rr.reward) : rr.reward;
    tape.backward(loss);

    std::vector<Array> grads;
    grads.reserve(bind.leaves.size());
    for (const Tensor& leaf : bind.leaves) grads.push_back(tape.grad(leaf));
    const double gnorm = grad_global_norm(grads);
    clip_and_step(bind.trainable, std::move(grads), state, adam);

    const double ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
    log.records.push_back(RunRecord{it, rr.reward.scalar(), gnorm, ms});
  }
  return log;
}

}  // namespace drtune
