#include <doctest.h>

#include <cmath>

#include "drtune/experiments.hpp"
#include "drtune/strategy.hpp"

using namespace drtune;

namespace {

struct Fixture {
  Denoiser model;
  NoiseSchedule sched;
  SamplerCoeffs ddpm;
  SamplerCoeffs ddim;

  Fixture()
      : model([] {
          Rng rng(2);
          return Denoiser::create(4, 4, 8, 16, rng);
        }()),
        sched(build_linear_schedule(6, 0.02, 0.3)),
        ddpm(ddpm_coeffs(sched)),
        ddim(ddim_coeffs(sched, 0.0)) {}

  StrategyConfig cfg(StrategyKind kind) const {
    StrategyConfig c = StrategyConfig::for_kind(kind, 6);
    c.batch = 4;
    c.seed = 7;
    return c;
  }
};

BatchReward brightness() {
  return [](const Tensor& xb) { return mean(xb); };
}

}  // namespace

TEST_CASE("plan_steps: equally spaced subsets with bounded offset") {
  StrategyConfig cfg = StrategyConfig::for_kind(StrategyKind::DRTune, 50);
  CHECK(cfg.K == 5);
  CHECK(cfg.m == 20);
  CHECK(cfg.sg_input);
  Rng rng(1);
  for (int rep = 0; rep < 2000; ++rep) {
    StepPlan p = plan_steps(cfg, rng);
    REQUIRE(p.t_train.size() == 5);
    const int s = p.t_train[0];
    CHECK(s >= 1);
    CHECK(s <= 50 - 4 * 10);
    for (int i = 0; i < 5; ++i) CHECK(p.t_train[i] == s + i * 10);
    CHECK(p.t_min >= 1);
    CHECK(p.t_min <= 20);
  }
  // every valid offset occurs
  std::vector<int> seen(11, 0);
  Rng rng2(9);
  for (int rep = 0; rep < 2000; ++rep) seen[plan_steps(cfg, rng2).t_train[0]]++;
  for (int s = 1; s <= 10; ++s) CHECK(seen[s] > 0);
}

TEST_CASE("plan_steps: first-K, last-value, single-step, and suffix plans") {
  Rng rng(3);
  {
    StrategyConfig cfg = StrategyConfig::for_kind(StrategyKind::DRaFT_K, 50);
    cfg.K = 3;
    StepPlan p = plan_steps(cfg, rng);
    CHECK(p.t_train == std::vector<int>{1, 2, 3});
    CHECK(p.t_min == 0);
    CHECK(p.lv_replicas == 1);
  }
  {
    StrategyConfig cfg = StrategyConfig::for_kind(StrategyKind::DRaFT_LV, 50);
    StepPlan p = plan_steps(cfg, rng);
    CHECK(p.t_train == std::vector<int>{1});
    CHECK(p.lv_replicas == 2);
  }
  {
    StrategyConfig cfg = StrategyConfig::for_kind(StrategyKind::ReFL, 50);
    for (int rep = 0; rep < 500; ++rep) {
      StepPlan p = plan_steps(cfg, rng);
      REQUIRE(p.t_train.size() == 1);
      CHECK(p.t_train[0] == p.t_min);
      CHECK(p.t_min >= 1);
      CHECK(p.t_min <= cfg.m);
    }
  }
  {
    StrategyConfig cfg = StrategyConfig::for_kind(StrategyKind::AlignProp, 50);
    for (int rep = 0; rep < 200; ++rep) {
      StepPlan p = plan_steps(cfg, rng);
      REQUIRE(!p.t_train.empty());
      CHECK(p.t_train.front() == 1);
      CHECK(p.t_train.back() <= 50);
      for (std::size_t i = 1; i < p.t_train.size(); ++i)
        CHECK(p.t_train[i] == p.t_train[i - 1] + 1);
    }
    cfg.alignprop_literal_suffix = true;
    for (int rep = 0; rep < 200; ++rep) {
      StepPlan p = plan_steps(cfg, rng);
      CHECK(p.t_train.back() == 50);
    }
  }
  {
    StrategyConfig bad = StrategyConfig::for_kind(StrategyKind::DRTune, 10);
    bad.K = 11;
    CHECK_THROWS_AS(plan_steps(bad, rng), ConfigError);
  }
}

TEST_CASE("rollout with no trained steps leaves the adapter gradient at zero") {
  Fixture fx;
  Rng rng(11);
  LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
  for (auto& blk : ad.b) blk.value = rng.normal_array(blk.value.size()) * 0.1;

  Tape tape;
  Binding bind = bind_lora(tape, fx.model.mlp, ad);
  StepPlan plan;  // t_train empty: every eps_hat detached
  StrategyConfig cfg = fx.cfg(StrategyKind::DRaFT_K);
  cfg.sg_input = false;
  Rng roll(5);
  RolloutResult rr =
      rollout(fx.model, bind, fx.ddpm, fx.sched, plan, cfg, brightness(), roll);
  tape.backward(rr.reward);
  for (const Tensor& leaf : bind.leaves)
    CHECK(tape.grad(leaf).abs().maxCoeff() == 0.0);
}

TEST_CASE("trained-step subset is exclusive: grads appear iff t is trained") {
  Fixture fx;
  auto grad_mass = [&](const StepPlan& plan) {
    Rng rng(11);
    LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
    for (auto& blk : ad.b) blk.value = rng.normal_array(blk.value.size()) * 0.1;
    Tape tape;
    Binding bind = bind_lora(tape, fx.model.mlp, ad);
    StrategyConfig cfg = fx.cfg(StrategyKind::DRaFT_K);
    cfg.sg_input = true;  // isolate per-step contributions
    Rng roll(5);
    RolloutResult rr = rollout(fx.model, bind, fx.ddpm, fx.sched, plan, cfg,
                               brightness(), roll);
    tape.backward(rr.reward);
    double total = 0.0;
    for (const Tensor& leaf : bind.leaves)
      total += tape.grad(leaf).abs().sum();
    return total;
  };
  StepPlan one;
  one.t_train = {3};
  CHECK(grad_mass(one) > 0.0);
  StepPlan none;
  CHECK(grad_mass(none) == 0.0);
}

TEST_CASE("sg_input changes gradients but never forward values") {
  Fixture fx;
  auto x0_of = [&](bool sg) {
    Rng rng(11);
    LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
    Tape tape;
    Binding bind = bind_lora(tape, fx.model.mlp, ad);
    StepPlan plan;
    plan.t_train = {1, 2};
    StrategyConfig cfg = fx.cfg(StrategyKind::DRaFT_K);
    cfg.sg_input = sg;
    Rng roll(21);
    RolloutResult rr = rollout(fx.model, bind, fx.ddpm, fx.sched, plan, cfg,
                               brightness(), roll);
    return Array(rr.x0.data);
  };
  Array on = x0_of(true), off = x0_of(false);
  REQUIRE(on.size() == off.size());
  for (Eigen::Index i = 0; i < on.size(); ++i) CHECK(on[i] == off[i]);
}

TEST_CASE("early stop truncates the chain through predict_x0") {
  Fixture fx;
  Rng rng(11);
  LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
  Tape tape;
  Binding bind = bind_lora(tape, fx.model.mlp, ad);
  StepPlan plan;
  plan.t_train = {4};
  plan.t_min = 4;
  StrategyConfig cfg = fx.cfg(StrategyKind::DRTune);
  Rng roll(3);
  RolloutResult rr =
      rollout(fx.model, bind, fx.ddpm, fx.sched, plan, cfg, brightness(), roll);
  CHECK(rr.x0.data.isFinite().all());
  tape.backward(rr.reward);
  double total = 0.0;
  for (const Tensor& leaf : bind.leaves) total += tape.grad(leaf).abs().sum();
  CHECK(total > 0.0);
}

TEST_CASE("deterministic sampling is reproducible bit-for-bit") {
  Fixture fx;
  Rng r1(33), r2(33);
  Array a = sample_batch(fx.model, nullptr, fx.ddim, fx.sched, 3, r1);
  Array b = sample_batch(fx.model, nullptr, fx.ddim, fx.sched, 3, r2);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  Rng r3(34);
  Array c = sample_batch(fx.model, nullptr, fx.ddim, fx.sched, 3, r3);
  double diff = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) diff += std::abs(a[i] - c[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("train_reward never touches base weights and reruns identically") {
  Fixture fx;
  std::vector<Array> before;
  for (const auto& p : fx.model.mlp.params) before.push_back(p.value);

  auto run = [&] {
    Rng rng(50);
    LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
    StrategyConfig cfg = fx.cfg(StrategyKind::DRTune);
    cfg.lr = 1e-3;
    TrainOptions opt;
    opt.iters = 5;
    return train_reward(fx.model, ad, fx.sched, fx.ddpm, cfg, brightness(),
                        opt);
  };
  RunLog l1 = run(), l2 = run();
  REQUIRE(l1.records.size() == 5);
  REQUIRE(l2.records.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(l1.records[i].reward == l2.records[i].reward);
    CHECK(l1.records[i].grad_norm == l2.records[i].grad_norm);
    CHECK(l1.records[i].grad_norm > 0.0);
  }
  for (std::size_t i = 0; i < before.size(); ++i)
    for (Eigen::Index j = 0; j < before[i].size(); ++j)
      CHECK(fx.model.mlp.params[i].value[j] == before[i][j]);
}

TEST_CASE("lv rollout averages two replica rewards") {
  Fixture fx;
  Rng rng(60);
  LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
  Tape tape;
  Binding bind = bind_lora(tape, fx.model.mlp, ad);
  StrategyConfig cfg = fx.cfg(StrategyKind::DRaFT_LV);
  Rng roll(8);
  StepPlan plan = plan_steps(cfg, roll);
  CHECK(plan.lv_replicas == 2);
  RolloutResult rr =
      rollout(fx.model, bind, fx.ddpm, fx.sched, plan, cfg, brightness(), roll);
  CHECK(rr.reward.data.size() == 1);
  tape.backward(rr.reward);
  double total = 0.0;
  for (const Tensor& leaf : bind.leaves) total += tape.grad(leaf).abs().sum();
  CHECK(total > 0.0);
}

TEST_CASE("seconds budget stops early") {
  Fixture fx;
  Rng rng(70);
  LoRAAdapter ad = LoRAAdapter::create(fx.model.mlp, 2, 0.7, rng);
  StrategyConfig cfg = fx.cfg(StrategyKind::DRaFT_K);
  TrainOptions opt;
  opt.iters = 100000;
  opt.budget_seconds = 0.05;
  RunLog log = train_reward(fx.model, ad, fx.sched, fx.ddpm, cfg, brightness(),
                            opt);
  CHECK(log.records.size() < 100000);
  CHECK(!log.config_echo.empty());
}

TEST_CASE("eval_reward_on_samples scores well-shaped batches deterministically") {
  Fixture fx;
  RewardSpec spec;
  spec.kind = RewardKind::symmetry;
  BatchReward rew = make_batch_reward(spec, 4, 4, nullptr);
  const double a = eval_reward_on_samples(fx.model, nullptr, fx.ddpm, fx.sched,
                                          rew, 2, 4, 11);
  const double b = eval_reward_on_samples(fx.model, nullptr, fx.ddpm, fx.sched,
                                          rew, 2, 4, 11);
  CHECK(std::isfinite(a));
  CHECK(a == b);
}
