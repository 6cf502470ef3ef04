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

#include "rtgae/latentopt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "rtgae/decoder.hpp"
#include "rtgae/parallel.hpp"
#include "rtgae/vae.hpp"

namespace rtgae {

std::optional<double> expr_eval(const Tree& t, double x) {
  auto arg = [&](std::size_t i) { return expr_eval(t.children.at(i), x); };
  const auto& l = t.label;
  if (t.children.empty()) {
    if (l == "x") return x;
    if (l == "1") return 1.0;
    if (l == "2") return 2.0;
    if (l == "3") return 3.0;
  } else if (t.children.size() == 1 && (l == "sin" || l == "exp")) {
    auto a = arg(0);
    if (!a) return std::nullopt;
    return l == "sin" ? std::sin(*a) : std::exp(*a);
  } else if (t.children.size() == 2 && (l == "+" || l == "*" || l == "/")) {
    auto a = arg(0), b = arg(1);
    if (!a || !b) return std::nullopt;
    if (l == "+") return *a + *b;
    if (l == "*") return *a * *b;
    if (std::abs(*b) < 1e-12) return std::nullopt;
    return *a / *b;
  }
  throw std::invalid_argument("not an expression: " + to_string(t));
}

double expr_target(double x) { return 1.0 / 3.0 + x + std::sin(x * x); }

double expr_score(const Tree& tree) {
  constexpr int kPoints = 1000;
  double mse = 0;
  for (int i = 0; i < kPoints; ++i) {
    const double x = -10.0 + 20.0 * i / (kPoints - 1);
    auto y = expr_eval(tree, x);
    if (!y) return kExprPenalty;
    const double d = *y - expr_target(x);
    mse += d * d;
  }
  mse /= kPoints;
  const double s = std::log1p(mse);
  return std::isfinite(s) ? std::min(s, kExprPenalty) : kExprPenalty;
}

Objective expressions_objective() {
  return {Direction::kMinimize, [](const Tree& t) -> std::optional<double> { return expr_score(t); },
          kExprPenalty};
}

ESConfig resolve_es_config(ESConfig c, Eigen::Index dim) {
  if (dim < 1) throw std::invalid_argument("search dimension must be positive");
  if (c.population == 0)
    c.population = 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(dim))));
  if (c.parents == 0) c.parents = std::max<std::size_t>(1, c.population / 2);
  if (c.parents > c.population) throw std::invalid_argument("parents must not exceed population");
  if (c.iterations < 1) throw std::invalid_argument("need at least one iteration");
  if (!(c.sigma0 > 0)) throw std::invalid_argument("initial step size must be positive");
  if (c.population > c.budget)
    throw std::invalid_argument("budget of " + std::to_string(c.budget) +
                                " evaluations is exhausted before one generation of " +
                                std::to_string(c.population));
  if (c.iterations * c.population > c.budget)
    throw std::invalid_argument(std::to_string(c.iterations) + " iterations of " +
                                std::to_string(c.population) + " candidates exceed the budget of " +
                                std::to_string(c.budget));
  return c;
}

namespace {

struct Evaluation {
  double score = 0;
  std::optional<Tree> tree;
};

using Evaluator = std::function<Evaluation(std::size_t evaluation, const Vector& v)>;

ESResult run_es(Eigen::Index dim, const Evaluator& evaluate, Direction dir, double penalty,
                const ESConfig& raw) {
  const ESConfig c = resolve_es_config(raw, dim);
  const double n = static_cast<double>(dim);
  const std::size_t lambda = c.population, mu = c.parents;

  Vector w(mu);
  for (std::size_t i = 0; i < mu; ++i)
    w[i] = std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i) + 1.0);
  w /= w.sum();
  const double mu_eff = 1.0 / w.squaredNorm();
  const double c_sigma = (mu_eff + 2) / (n + mu_eff + 5);
  const double d_sigma = 1 + 2 * std::max(0.0, std::sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma;
  const double c_mu = std::clamp((n + 2) / 3 * 2 * (mu_eff - 2 + 1 / mu_eff) /
                                     ((n + 2) * (n + 2) + mu_eff),
                                 0.0, 1.0);
  const double chi_n = std::sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n));

  Rng sample_rng = Rng(c.seed).split(0);
  Vector mean = Vector::Zero(dim), diag = Vector::Ones(dim), p_sigma = Vector::Zero(dim);
  double sigma = c.sigma0;
  const double sign = dir == Direction::kMinimize ? 1.0 : -1.0;

  ESResult res;
  bool have_best = false;
  for (std::size_t gen = 0; gen < c.iterations; ++gen) {
    std::vector<Vector> y(lambda), x(lambda);
    for (std::size_t k = 0; k < lambda; ++k) {
      y[k] = sample_rng.normal_vector(dim).cwiseProduct(diag.cwiseSqrt());
      x[k] = mean + sigma * y[k];
    }
    std::vector<Evaluation> evals(lambda);
    const std::size_t offset = res.evaluations;
    parallel_for(lambda, c.threads, [&](std::size_t k) {
      evals[k] = evaluate(offset + k, x[k]);
      if (!std::isfinite(evals[k].score)) evals[k].score = penalty;
    });
    res.evaluations += lambda;

    std::vector<std::size_t> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sign * evals[a].score < sign * evals[b].score;
    });
    for (std::size_t k = 0; k < lambda; ++k) {
      const bool better = !have_best || sign * evals[k].score < sign * res.best_score;
      if (better) {
        have_best = true;
        res.best_score = evals[k].score;
        res.best_tree = evals[k].tree;
        res.best_latent = x[k];
      }
      res.history.push_back({gen, k, evals[k].score, x[k], std::move(evals[k].tree)});
    }

    Vector y_w = Vector::Zero(dim), rank_mu = Vector::Zero(dim);
    for (std::size_t i = 0; i < mu; ++i) {
      y_w += w[i] * y[order[i]];
      rank_mu += w[i] * y[order[i]].cwiseAbs2();
    }
    mean += sigma * y_w;
    p_sigma = (1 - c_sigma) * p_sigma +
              std::sqrt(c_sigma * (2 - c_sigma) * mu_eff) * y_w.cwiseQuotient(diag.cwiseSqrt());
    diag = (1 - c_mu) * diag + c_mu * rank_mu;
    sigma *= std::exp(c_sigma / d_sigma * (p_sigma.norm() / chi_n - 1));

    res.best_so_far.push_back(res.best_score);
    res.means.push_back(mean);
  }
  return res;
}

}  // namespace

ESResult optimize_latent(const Model& model, const Objective& objective, const ESConfig& config) {
  if (!objective.evaluate) throw std::invalid_argument("objective has no evaluator");
  const Rng decode_rng = Rng(config.seed).split(1);
  auto evaluate = [&](std::size_t e, const Vector& v) {
    Rng rng = decode_rng.split(e);
    try {
      Decoded d = decode(model, rho(model, v), model.start(), DecodeMode::kSample, &rng);
      auto s = objective.evaluate(d.tree);
      return Evaluation{s ? *s : objective.penalty, std::move(d.tree)};
    } catch (const DecodeBudgetError&) {
      return Evaluation{objective.penalty, std::nullopt};
    }
  };
  return run_es(model.config().n_vae, evaluate, objective.direction, objective.penalty, config);
}

ESResult optimize_raw(Eigen::Index dim, const LatentObjective& objective, Direction direction,
                      const ESConfig& config) {
  const double worst = direction == Direction::kMinimize ? HUGE_VAL : -HUGE_VAL;
  return run_es(
      dim, [&](std::size_t, const Vector& v) { return Evaluation{objective(v), std::nullopt}; },
      direction, worst, config);
}

void write_history_csv(const std::filesystem::path& path, const ESResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "generation,candidate,score,tree\n";
  for (const auto& c : result.history)
    out << c.generation << ',' << c.index << ',' << c.score << ",\""
        << (c.tree ? to_string(*c.tree) : "") << "\"\n";
}

}  // namespace rtgae
