// Copyright 2026 The rtgae Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "rtgae/datasets.hpp"
#include "rtgae/eval.hpp"
#include "rtgae/training.hpp"

using namespace rtgae;
namespace fs = std::filesystem;

namespace {

Model small_boolean(Eigen::Index n = 16, std::uint64_t seed = 1) {
  ModelConfig c;
  c.n = n;
  c.n_vae = 8;
  c.seed = seed;
  return Model(builtin_grammar("boolean"), c);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("plateau scheduler") {
  SUBCASE("constant loss for patience+1 epochs reduces once") {
    PlateauScheduler s(1e-3, 0.5, 3, 1e-4);
    int reductions = 0;
    for (int e = 0; e < 1 + 3 + 1; ++e) reductions += s.step(1.0);
    CHECK(reductions == 1);
    CHECK(s.lr() == 5e-4);
  }
  SUBCASE("improvement resets the counter") {
    PlateauScheduler s(1e-3, 0.5, 2, 1e-4);
    CHECK_FALSE(s.step(1.0));
    CHECK_FALSE(s.step(1.0));
    CHECK_FALSE(s.step(0.5));
    CHECK_FALSE(s.step(0.5));
    CHECK_FALSE(s.step(0.5));
    CHECK(s.step(0.5));
    CHECK(s.bad_epochs() == 0);
  }
  SUBCASE("improvement below the relative threshold counts as bad") {
    PlateauScheduler s(1e-3, 0.5, 0, 1e-4);
    s.step(1.0);
    CHECK(s.step(1.0 - 1e-6));
  }
  SUBCASE("lr never drops below the floor") {
    PlateauScheduler s(1e-3, 0.5, 0, 1e-4);
    for (int e = 0; e < 50; ++e) {
      s.step(1.0);
      CHECK(s.lr() >= 1e-4);
    }
    CHECK(s.lr() == 1e-4);
    CHECK_FALSE(s.step(1.0));
  }
  CHECK_THROWS_AS(PlateauScheduler(1e-4, 0.5, 3, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(PlateauScheduler(1e-3, 1.5, 3, 1e-4), std::invalid_argument);
}

TEST_CASE("zero epochs returns the initial model") {
  Model m = small_boolean();
  TrainConfig cfg;
  cfg.epochs = 0;
  TrainResult r = train(m, cfg, gen_boolean(20, 1), gen_boolean(5, 2));
  CHECK(r.metrics.empty());
  CHECK(r.model.params().same_values(m.params()));
}

TEST_CASE("training rejects trees outside the grammar") {
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS(train(small_boolean(), cfg, {parse_tree("and(x)")}, {}));
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(small_boolean(), cfg, gen_boolean(4, 1), {}), std::invalid_argument);
}

TEST_CASE("non-finite loss aborts with the batch") {
  Model m = small_boolean();
  m.params()[m.params().id("vae.a_mu")].value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  try {
    train(m, cfg, {parse_tree("x"), parse_tree("not(y)")}, {});
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("not(y)") != std::string::npos);
  }
}

TEST_CASE("fixed seed gives bit-identical checkpoints and metrics") {
  const auto dir = fs::temp_directory_path() / "rtgae_test_training";
  fs::create_directories(dir);
  auto trees = gen_boolean(200, 3);
  std::vector<Tree> valid(trees.begin() + 160, trees.end());
  trees.resize(160);
  std::string ck[2], csv[2];
  std::vector<EpochMetrics> metrics[2];
  for (int run = 0; run < 2; ++run) {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 11;
    cfg.checkpoint = dir / ("run" + std::to_string(run) + ".ckpt");
    cfg.metrics_csv = dir / ("run" + std::to_string(run) + ".csv");
    TrainResult r = train(small_boolean(), cfg, trees, valid);
    ck[run] = slurp(*cfg.checkpoint);
    csv[run] = slurp(*cfg.metrics_csv);
    metrics[run] = r.metrics;
  }
  CHECK(!ck[0].empty());
  CHECK(ck[0] == ck[1]);
  REQUIRE(metrics[0].size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(metrics[0][i].loss == metrics[1][i].loss);

  std::istringstream lines(csv[0]);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "epoch,split,loss,crossentropy,kl,lr,wall_seconds");
  std::size_t rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  CHECK(rows == 6);

  TrainConfig other;
  other.epochs = 3;
  other.seed = 12;
  other.checkpoint = dir / "other.ckpt";
  train(small_boolean(), other, trees, valid);
  CHECK(slurp(*other.checkpoint) != ck[0]);
  fs::remove_all(dir);
}

TEST_CASE("best checkpoint holds the lowest validation loss") {
  auto trees = gen_boolean(100, 4);
  std::vector<Tree> valid(trees.begin() + 80, trees.end());
  trees.resize(80);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.lr_init = 1e-2;
  cfg.lr_min = 1e-3;
  TrainResult r = train(small_boolean(), cfg, trees, valid);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : r.metrics)
    if (m.split == "valid") best = std::min(best, m.loss);
  CHECK(r.best_valid_loss == best);
  CHECK(evaluate_loss(r.model, valid).loss == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("training loss decreases over the first epochs") {
  auto trees = gen_boolean(1000, 5);
  TrainConfig cfg;
  cfg.epochs = 6;
  TrainResult r = train(small_boolean(32), cfg, trees, {});
  std::vector<double> losses;
  for (const auto& m : r.metrics) losses.push_back(m.loss);
  REQUIRE(losses.size() == 6);
  int non_increasing = 0;
  for (std::size_t e = 1; e < losses.size(); ++e) non_increasing += losses[e] <= losses[e - 1];
  CHECK(non_increasing >= 4);
  for (const auto& m : r.metrics) CHECK(m.lr >= cfg.lr_min);
}

TEST_CASE("overfits ten trees") {
  auto trees = gen_boolean(10, 6);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 1;
  TrainResult r = train(small_boolean(32), cfg, trees, trees);
  CHECK(r.metrics[r.metrics.size() - 2].loss < 0.1);
  EvalReport rep = autoencoding_rmse(r.model, trees);
  CHECK(rep.rmse == 0.0);
}

TEST_CASE("hyperparameter search") {
  auto trees = gen_boolean(40, 7);
  std::vector<Tree> valid(trees.begin() + 30, trees.end());
  trees.resize(30);
  ModelConfig mc;
  mc.n = 8;
  mc.n_vae = 4;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 3;
  const auto g = builtin_grammar("boolean");

  SearchResult one = hyper_search(g, mc, cfg, trees, valid, 1);
  REQUIRE(one.trials.size() == 1);
  CHECK(one.best_trial == 0);
  CHECK(one.beta == one.trials[0].beta);
  CHECK(one.s == one.trials[0].s);

  // without any training step every trial decodes the same initial model
  cfg.epochs = 0;
  SearchResult tie = hyper_search(g, mc, cfg, trees, valid, 5);
  for (const auto& t : tie.trials) CHECK(t.valid_rmse == tie.trials[0].valid_rmse);
  CHECK(tie.best_trial == 0);

  SearchResult wide = hyper_search(g, mc, cfg, trees, valid, 200);
  double lo = 1, hi = 0;
  for (const auto& t : wide.trials) {
    for (double v : {t.beta, t.s}) {
      CHECK(v >= 1e-5);
      CHECK(v <= 1.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  CHECK(lo < 1e-4);
  CHECK(hi > 1e-1);
  CHECK_THROWS_AS(hyper_search(g, mc, cfg, trees, valid, 0), std::invalid_argument);
}
