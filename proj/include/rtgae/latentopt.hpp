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

// Evolution-strategy search over the latent space for trees that optimize a
// black-box objective, plus the symbolic-regression objective.

#ifndef RTGAE_LATENTOPT_HPP_
#define RTGAE_LATENTOPT_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "rtgae/model.hpp"

namespace rtgae {

/// Value of an expressions-grammar tree at x; nullopt when a division by
/// |d| < 1e-12 occurs anywhere. Throws std::invalid_argument on unknown labels.
std::optional<double> expr_eval(const Tree& tree, double x);

/// 1/3 + x + sin(x*x)
double expr_target(double x);

inline constexpr double kExprPenalty = 5.0;

/// log(1 + MSE) against expr_target on 1000 evenly spaced points in [-10, 10],
/// capped at kExprPenalty. Any invalid point gives kExprPenalty.
double expr_score(const Tree& tree);

enum class Direction { kMinimize, kMaximize };

struct Objective {
  Direction direction = Direction::kMinimize;
  /// nullopt marks an invalid tree, which scores `penalty`.
  std::function<std::optional<double>(const Tree&)> evaluate;
  double penalty = kExprPenalty;
};

Objective expressions_objective();

struct ESConfig {
  std::size_t population = 0;  ///< 0: 4 + floor(3 ln dim)
  std::size_t parents = 0;     ///< 0: population / 2
  std::size_t iterations = 15;
  std::size_t budget = 750;
  double sigma0 = 0.5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct ESCandidate {
  std::size_t generation = 0, index = 0;
  double score = 0;
  Vector latent;
  std::optional<Tree> tree;  ///< empty for raw-latent runs and budget failures
};

struct ESResult {
  std::optional<Tree> best_tree;
  double best_score = 0;
  Vector best_latent;
  std::vector<ESCandidate> history;
  /// Best score after each generation, direction-adjusted monotone.
  std::vector<double> best_so_far;
  /// Distribution mean after each generation.
  std::vector<Vector> means;
  std::size_t evaluations = 0;
};

/// Resolves the zero defaults in `config` for a `dim`-dimensional search and
/// validates it. Throws std::invalid_argument.
ESConfig resolve_es_config(ESConfig config, Eigen::Index dim);

/// Separable (mu/mu_w, lambda) evolution strategy with cumulative step-size
/// adaptation and a diagonal rank-mu covariance update, started at the
/// origin. Each candidate v is decoded as rho(v) in sampling mode and scored;
/// budget failures and invalid trees receive the penalty.
ESResult optimize_latent(const Model& model, const Objective& objective, const ESConfig& config);

/// Same search on a raw latent objective, without decoding.
using LatentObjective = std::function<double(const Vector&)>;
ESResult optimize_raw(Eigen::Index dim, const LatentObjective& objective, Direction direction,
                      const ESConfig& config);

/// CSV with columns generation,candidate,score,tree.
void write_history_csv(const std::filesystem::path& path, const ESResult& result);

}  // namespace rtgae

#endif  // RTGAE_LATENTOPT_HPP_
