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

// Built-in grammars and synthetic data generators.
//
//   boolean      S -> and(S,S) | or(S,S) | not(S) | x | y
//   expressions  S -> +(S,S) | *(S,S) | /(S,S) | sin(S) | exp(S) | x | 1 | 2 | 3
//   cnf          conjunctive normal form over F, C, L, A (not deterministic;
//                used to exercise determinize)

#ifndef RTGAE_DATASETS_HPP_
#define RTGAE_DATASETS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rtgae/grammar.hpp"
#include "rtgae/tree.hpp"

namespace rtgae {

std::vector<std::string> builtin_grammar_ids();

/// Throws GrammarError for an unknown id.
RegularTreeGrammar builtin_grammar(std::string_view id);

/// Boolean formulae with at most three binary operators. The number of
/// binary operators is uniform in {0,...,3}; the binary skeleton is split
/// uniformly; every subformula is negated with probability 1/4, and a
/// negated one once more with probability 1/4 (chains capped at two).
/// Formulae with more than 14 nodes are redrawn.
std::vector<Tree> gen_boolean(std::size_t count, std::uint64_t seed);

/// Three-term sums (a + b) + c where a is an atom or binary(atom, atom), b
/// is unary(atom) and c is unary(atom) or unary(binary(atom, atom)). Each
/// alternative and every operator/atom is chosen uniformly.
std::vector<Tree> gen_expressions(std::size_t count, std::uint64_t seed);

struct DatasetSpec {
  std::string grammar = "boolean";
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  /// Fractions per split, e.g. {0.9, 0.1}; must sum to 1.
  std::vector<double> splits{0.9, 0.1};
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Tree> trees;
  std::vector<std::size_t> assignment;  ///< split index per tree

  std::vector<Tree> split(std::size_t index) const;
};

/// Generates spec.count trees and assigns splits by a seeded shuffle. For
/// "cnf" trees are uniform random derivations.
Dataset make_dataset(const DatasetSpec& spec);

/// Writes one tree per line to `path` and a manifest to `path` + ".manifest".
void write_dataset(const std::filesystem::path& path, const Dataset& data);

/// Reads trees and, if present, the manifest's split assignment; without a
/// manifest every tree is in split 0.
Dataset read_dataset(const std::filesystem::path& path);

/// Reads a tree-per-line file; blank lines and '#' comments are skipped.
std::vector<Tree> read_trees(const std::filesystem::path& path);
void write_trees(const std::filesystem::path& path, const std::vector<Tree>& trees);

}  // namespace rtgae

#endif  // RTGAE_DATASETS_HPP_
