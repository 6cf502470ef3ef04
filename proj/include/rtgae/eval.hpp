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

#ifndef RTGAE_EVAL_HPP_
#define RTGAE_EVAL_HPP_

#include <filesystem>
#include <vector>

#include "rtgae/model.hpp"

namespace rtgae {

/// Unit-cost ordered tree edit distance (Zhang and Shasha).
std::size_t tree_edit_distance(const Tree& a, const Tree& b);

struct EvalReport {
  double rmse = 0.0;
  std::vector<double> distances;
  std::vector<Tree> outputs;           ///< decoded trees, completed when over budget
  std::vector<bool> budget_failed;
  double correctness_rate = 0.0;
  std::size_t samples = 0;
  std::size_t parse_failures = 0;
  std::size_t budget_failures = 0;
};

/// encode -> noise-free bottleneck -> greedy decode -> TED. Decodes that run
/// out of budget are completed with the cheapest derivations of the open
/// nonterminals before measuring the distance.
EvalReport autoencoding_rmse(const Model& model, const std::vector<Tree>& trees,
                             std::size_t threads = 1);

/// Decodes rho(v) for m draws v ~ N(0, I) in sampling mode and reports the
/// fraction that finish within budget and parse to a start nonterminal.
/// Sample i uses the stream rng.split(i), so threads do not change results.
EvalReport syntactic_correctness_rate(const Model& model, std::size_t m, const Rng& rng,
                                      std::size_t threads = 1);

/// One row per tree (index, distance, budget_failed, input, output) and a
/// trailing "# rmse=..." summary line.
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report,
                    const std::vector<Tree>& inputs);

std::string summary(const EvalReport& report);

}  // namespace rtgae

#endif  // RTGAE_EVAL_HPP_
