#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drtune/config.hpp"
#include "drtune/experiments.hpp"
#include "drtune/reports.hpp"
#include "drtune/rewards.hpp"

using namespace drtune;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("toy dataset is deterministic, bounded, and labeled") {
  for (DatasetKind kind :
       {DatasetKind::shapes, DatasetKind::blobs, DatasetKind::checkers}) {
    ToyDataset d1 = gen_toy_dataset(kind, 32, 16, 5);
    ToyDataset d2 = gen_toy_dataset(kind, 32, 16, 5);
    REQUIRE(d1.images.size() == 32);
    CHECK(d1.height == 16);
    for (std::size_t i = 0; i < d1.images.size(); ++i) {
      CHECK(d1.images[i].size() == 256);
      CHECK(d1.images[i].minCoeff() >= -1.0);
      CHECK(d1.images[i].maxCoeff() <= 1.0);
      for (Eigen::Index j = 0; j < 256; ++j)
        CHECK(d1.images[i][j] == d2.images[i][j]);
      CHECK(d1.labels[i] >= 0);
      CHECK(d1.labels[i] < d1.num_classes);
    }
  }
  CHECK_THROWS_AS(gen_toy_dataset(DatasetKind::shapes, 4, 7, 0), ValueError);
}

TEST_CASE("shapes corpus is left-right asymmetric on average") {
  ToyDataset ds = gen_toy_dataset(DatasetKind::shapes, 256, 16, 11);
  double total = 0.0;
  for (const Array& img : ds.images)
    total += symmetry_reward(constant({16, 16}, img)).scalar();
  CHECK(total / 256.0 >= 0.5);
}

TEST_CASE("config round-trips losslessly") {
  ExperimentConfig cfg;
  cfg.dataset_kind = DatasetKind::blobs;
  cfg.T = 12;
  cfg.beta_end = 0.17;
  cfg.sampler = "ddim";
  cfg.ddim_eta = 0.25;
  cfg.strategy.kind = StrategyKind::ReFL;
  cfg.strategy.K = 3;
  cfg.strategy.sg_input = false;
  cfg.reward.kind = RewardKind::compressibility;
  cfg.reward.dct_keep = 6;
  cfg.budget_mode = BudgetMode::seconds;
  cfg.budget_seconds = 7.5;
  cfg.checkpoint = "model.ckpt";
  cfg.seed = 99;

  const std::string text = serialize_config(cfg);
  ExperimentConfig back = parse_config_text(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.strategy.kind == StrategyKind::ReFL);
  CHECK(back.reward.dct_keep == 6);
  CHECK(back.beta_end == 0.17);
  CHECK(back.seed == 99);
}

TEST_CASE("config parser: comments, blanks, and unknown keys") {
  ExperimentConfig cfg = parse_config_text(
      "# comment\n"
      "\n"
      "schedule.steps = 25\n"
      "strategy.kind = draft_lv   # trailing comment\n"
      "reward.kind = brightness\n");
  CHECK(cfg.T == 25);
  CHECK(cfg.strategy.kind == StrategyKind::DRaFT_LV);
  CHECK_THROWS_AS(parse_config_text("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("schedule.steps is 25\n"), ConfigError);
}

TEST_CASE("metrics csv header and rows") {
  RunLog log;
  log.records.push_back(RunRecord{0, 1.5, 0.25, 3.0});
  log.records.push_back(RunRecord{1, 1.75, 0.125, 2.0});
  const std::string path = "test_metrics.csv";
  write_metrics_csv(path, log);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,reward,grad_norm,wall_ms");
  std::getline(in, line);
  CHECK(line.rfind("0,1.5", 0) == 0);
  std::remove(path.c_str());
}

TEST_CASE("svg plot is well-formed") {
  Series s;
  s.name = "reward";
  s.x = {0, 1, 2};
  s.y = {0.1, 0.4, 0.2};
  const std::string path = "test_plot.svg";
  write_svg_plot(path, "title", "iter", "reward", {s});
  const std::string text = slurp(path);
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("<polyline") != std::string::npos);
  CHECK(text.find("</svg>") != std::string::npos);
  CHECK(text.find("reward") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("pgm quantization round-trip") {
  Array img(4);
  img << -1.0, 1.0, 0.0, 2.5;  // last value clamps to 255
  const std::string path = "test_img.pgm";
  write_pgm(path, img, 2, 2);
  int h = 0, w = 0;
  Array back = read_pgm(path, h, w);
  std::remove(path.c_str());
  CHECK(h == 2);
  CHECK(w == 2);
  CHECK(back[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(back[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(back[2] - 0.0) <= 1.0 / 255.0);
  CHECK(back[3] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("summary csv") {
  const std::string path = "test_summary.csv";
  write_summary_csv(path, {{"final_reward", 0.5}, {"iters", 10}});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "name,value");
  std::getline(in, line);
  CHECK(line.rfind("final_reward,", 0) == 0);
  std::remove(path.c_str());
}

TEST_CASE("sweep thread cap honors DRTUNE_THREADS") {
  setenv("DRTUNE_THREADS", "3", 1);
  CHECK(sweep_thread_cap() == 3);
  setenv("DRTUNE_THREADS", "0", 1);
  CHECK_THROWS_AS(sweep_thread_cap(), ConfigError);
  setenv("DRTUNE_THREADS", "junk", 1);
  CHECK_THROWS_AS(sweep_thread_cap(), ConfigError);
  unsetenv("DRTUNE_THREADS");
  CHECK(sweep_thread_cap() >= 1);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg;
  cfg.T = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  ExperimentConfig cfg2;
  cfg2.sampler = "euler";
  CHECK_THROWS_AS(cfg2.validate(), ConfigError);
}
