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

#include "doctest.h"
#include "rtgae/datasets.hpp"
#include "rtgae/latentopt.hpp"

using namespace rtgae;
using doctest::Approx;

namespace {

const char* kTruth = "+(+(/(1, 3), x), sin(*(x, x)))";

Model expressions_model(std::uint64_t seed = 1) {
  ModelConfig c;
  c.n = 16;
  c.n_vae = 8;
  c.seed = seed;
  c.max_rules = 40;
  return Model(builtin_grammar("expressions"), c);
}

double sphere(const Vector& v) { return (v.array() - 1.5).square().sum(); }

}  // namespace

TEST_CASE("expression evaluation") {
  CHECK(*expr_eval(parse_tree(kTruth), 0.0) == 1.0 / 3.0);
  CHECK(*expr_eval(parse_tree("x"), 2.0) == 2.0);
  CHECK_FALSE(expr_eval(parse_tree("/(2, x)"), 0.0));
  CHECK_FALSE(expr_eval(parse_tree("sin(+(1, /(2, *(x, 3))))"), 0.0));
  CHECK_FALSE(expr_eval(parse_tree("/(1, +(x, 1))"), -1.0 + 1e-13));
  CHECK(*expr_eval(parse_tree("/(1, +(x, 1))"), -1.0 + 1e-6) == Approx(1e6).epsilon(1e-6));
  CHECK(*expr_eval(parse_tree("exp(*(2, sin(3)))"), 0.0) == Approx(std::exp(2 * std::sin(3.0))));
  CHECK_THROWS_AS(expr_eval(parse_tree("cos(x)"), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(expr_eval(parse_tree("sin(x, x)"), 0.0), std::invalid_argument);
  for (double x : {-10.0, -1.5, 0.0, 0.25, 7.0}) CHECK(*expr_eval(parse_tree(kTruth), x) == expr_target(x));
}

TEST_CASE("expression score") {
  CHECK(expr_score(parse_tree(kTruth)) == 0.0);
  // values from an independent numpy evaluation on the same grid
  CHECK(expr_score(parse_tree("x")) == Approx(0.48756139021771555).epsilon(1e-12));
  CHECK(expr_score(parse_tree("sin(x)")) == Approx(3.524846908156633).epsilon(1e-12));
  CHECK(expr_score(parse_tree("+(x, sin(*(x, x)))")) == Approx(0.10536051565782632).epsilon(1e-12));
  CHECK(std::abs(expr_score(parse_tree("x")) - 0.49) <= 0.05);
  // 1000 points symmetric around 0 never hit x = 0 exactly, unlike x = 1 ± 1e-12
  CHECK(expr_score(parse_tree("/(1, x)")) < kExprPenalty);
  CHECK(expr_score(parse_tree("exp(exp(x))")) == kExprPenalty);
  // exp(243 x) < 1e-12 on the negative half of the grid
  CHECK(expr_score(parse_tree("/(1, exp(*(x, *(3, *(3, *(3, *(3, 3)))))))")) == kExprPenalty);
}

TEST_CASE("expression score is bounded by the penalty") {
  auto trees = gen_expressions(300, 2);
  for (const auto& t : trees) {
    const double s = expr_score(t);
    CHECK(s >= 0.0);
    CHECK(s <= kExprPenalty);
    bool invalid = false;
    for (int i = 0; i < 1000 && !invalid; ++i) invalid = !expr_eval(t, -10.0 + 20.0 * i / 999);
    if (invalid) CHECK(s == kExprPenalty);
  }
}

TEST_CASE("evolution strategy configuration") {
  ESConfig c = resolve_es_config({}, 8);
  CHECK(c.population == 10);
  CHECK(c.parents == 5);
  CHECK(c.iterations == 15);
  CHECK(c.budget == 750);
  CHECK(c.sigma0 == 0.5);
  CHECK(resolve_es_config({}, 1).population == 4);
  CHECK(resolve_es_config({}, 16).population == 12);

  ESConfig small;
  small.budget = 9;
  CHECK_THROWS_AS(resolve_es_config(small, 8), std::invalid_argument);
  small.budget = 100;
  CHECK_THROWS_AS(resolve_es_config(small, 8), std::invalid_argument);
  ESConfig parents;
  parents.population = 4;
  parents.parents = 5;
  CHECK_THROWS_AS(resolve_es_config(parents, 8), std::invalid_argument);
  ESConfig sigma;
  sigma.sigma0 = 0;
  CHECK_THROWS_AS(resolve_es_config(sigma, 8), std::invalid_argument);
}

TEST_CASE("evolution strategy on raw latent objectives") {
  SUBCASE("shifted sphere: the mean approaches the optimum") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ESConfig c;
      c.seed = seed;
      ESResult r = optimize_raw(8, sphere, Direction::kMinimize, c);
      CHECK(r.evaluations == 150);
      CHECK(r.history.size() == 150);
      REQUIRE(r.means.size() == 15);
      const Vector opt = Vector::Constant(8, 1.5);
      CHECK((r.means.back() - opt).norm() < 0.5 * opt.norm());
      CHECK(r.best_score < sphere(Vector::Zero(8)));
    }
  }
  SUBCASE("maximize") {
    ESResult r = optimize_raw(4, [](const Vector& v) { return -sphere(v); }, Direction::kMaximize, {});
    CHECK(r.best_score > -sphere(Vector::Zero(4)) / 4);
    for (std::size_t g = 1; g < r.best_so_far.size(); ++g) CHECK(r.best_so_far[g] >= r.best_so_far[g - 1]);
  }
  SUBCASE("constant objective") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ESConfig c;
      c.seed = seed;
      ESResult r = optimize_raw(8, [](const Vector&) { return 0.7; }, Direction::kMinimize, c);
      CHECK(r.best_score == 0.7);
      // unbiased selection: each mean coordinate is a random walk with steps of
      // standard deviation sigma0 / sqrt(mu_eff); 5 standard deviations after 15 steps
      const ESConfig rc = resolve_es_config(c, 8);
      Vector w(rc.parents);
      for (std::size_t i = 0; i < rc.parents; ++i)
        w[i] = std::log(rc.parents + 0.5) - std::log(i + 1.0);
      const double mu_eff = w.sum() * w.sum() / w.squaredNorm();
      const double bound = 5 * c.sigma0 * std::sqrt(15 / mu_eff);
      for (const auto& m : r.means) CHECK(m.cwiseAbs().maxCoeff() < bound);
    }
  }
  SUBCASE("best so far is monotone and matches history") {
    ESResult r = optimize_raw(6, [](const Vector& v) { return std::sin(3 * v[0]) + v.squaredNorm(); },
                              Direction::kMinimize, {});
    double best = HUGE_VAL;
    std::size_t i = 0;
    for (std::size_t g = 0; g < r.best_so_far.size(); ++g) {
      for (; i < r.history.size() && r.history[i].generation == g; ++i) best = std::min(best, r.history[i].score);
      CHECK(r.best_so_far[g] == best);
    }
    CHECK(r.best_score == best);
  }
  SUBCASE("non-finite scores become the worst value") {
    ESResult r = optimize_raw(2, [](const Vector& v) { return v[0] > 0 ? NAN : v.squaredNorm(); },
                              Direction::kMinimize, {});
    CHECK(std::isfinite(r.best_score));
  }
}

TEST_CASE("latent optimization decodes and scores trees") {
  Model m = expressions_model();
  ESConfig c;
  c.seed = 4;
  ESResult r = optimize_latent(m, expressions_objective(), c);
  CHECK(r.evaluations == 150);
  REQUIRE(r.history.size() == 150);
  for (const auto& h : r.history) {
    if (h.tree) {
      CHECK(in_language(m.grammar(), *h.tree));
      CHECK(h.score == expr_score(*h.tree));
    } else {
      CHECK(h.score == kExprPenalty);
    }
  }
  REQUIRE(r.best_tree);
  CHECK(r.best_score == expr_score(*r.best_tree));

  ESResult again = optimize_latent(m, expressions_objective(), c);
  c.threads = 3;
  ESResult threaded = optimize_latent(m, expressions_objective(), c);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    CHECK(again.history[i].score == r.history[i].score);
    CHECK(threaded.history[i].tree == r.history[i].tree);
    CHECK(threaded.history[i].latent == r.history[i].latent);
  }

  SUBCASE("history csv") {
    auto path = std::filesystem::temp_directory_path() / "rtgae_test_history.csv";
    write_history_csv(path, r);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "generation,candidate,score,tree");
    std::getline(in, line);
    CHECK(line.rfind("0,0,", 0) == 0);
    std::size_t rows = 1;
    for (; std::getline(in, line);) ++rows;
    CHECK(rows == 150);
    std::filesystem::remove(path);
  }
}

TEST_CASE("budget failures receive the penalty") {
  Model m = expressions_model();
  auto& V = m.params()[m.params().id("dec.S.V")].value;
  auto& b = m.params()[m.params().id("dec.S.b")].value;
  V.setZero();
  b.setZero();
  b(3, 0) = 50.0;  // sin(S) forever
  ESResult r = optimize_latent(m, expressions_objective(), {});
  for (const auto& h : r.history) {
    CHECK_FALSE(h.tree);
    CHECK(h.score == kExprPenalty);
  }
  CHECK(r.best_score == kExprPenalty);
  CHECK_FALSE(r.best_tree);
}
