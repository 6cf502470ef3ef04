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

// Grammar-guided decoding. Free decoding and the teacher-forced loss share
// one stack engine: pop (A, x), score the rules of A from x, apply a rule,
// then for each slot j compute y_j = g^r_j(x) and x <- x - y_j, and push the
// children so that the first one is expanded next.

#ifndef RTGAE_DECODER_HPP_
#define RTGAE_DECODER_HPP_

#include <optional>
#include <span>
#include <stdexcept>

#include "rtgae/model.hpp"

namespace rtgae {

enum class DecodeMode { kSample, kGreedy };

struct DecodeTrace {
  RuleSequence rules;
  std::vector<Vector> logits;
  std::vector<Vector> codes;          ///< x_t at each step
  std::vector<double> probabilities;  ///< p(r_t | x_t) of the chosen rule

  double log_probability() const;
};

class DecodeBudgetError : public std::runtime_error {
 public:
  DecodeBudgetError(std::size_t max_rules, DecodeTrace partial, std::vector<Nonterminal> pending);
  const DecodeTrace& partial() const { return partial_; }
  /// Open nonterminals, next-to-expand first.
  const std::vector<Nonterminal>& pending() const { return pending_; }

 private:
  DecodeTrace partial_;
  std::vector<Nonterminal> pending_;
};

struct Decoded {
  Tree tree;
  DecodeTrace trace;
};

/// Raw logits h_A(x) = V^A x + b^A over the rules of A, in rules_for order.
Var score_rules(const Model& model, const Nonterminal& A, Var x);
Vector score_rules(const Model& model, const Nonterminal& A, const Vector& x);

/// y_1..y_k for rule r given the parent's vector, applying x <- x - y_j
/// between slots.
std::vector<Var> child_codes(const Model& model, std::size_t r, Var x);

/// Decodes from z and plain nonterminal A. Greedy picks the argmax with the
/// lowest index on ties and draws nothing from rng. max_rules defaults to
/// the model's budget. Throws DecodeBudgetError when the budget runs out.
Decoded decode(const Model& model, const Vector& z, const Nonterminal& A, DecodeMode mode,
               Rng* rng = nullptr, std::optional<std::size_t> max_rules = std::nullopt);

/// Sum of -log p(r_t | x_t) over the gold rule sequence, walking the same
/// stack discipline as decode. Throws GenerateError if the sequence does not
/// derive a tree from `start`.
Var teacher_forced_crossentropy(const Model& model, Var z, const Nonterminal& start,
                                std::span<const std::size_t> rules);

/// The partial trace completed by the cheapest derivation of every pending
/// nonterminal.
Tree complete_partial(const Model& model, const Nonterminal& start, const DecodeBudgetError& e);

}  // namespace rtgae

#endif  // RTGAE_DECODER_HPP_
