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

#include "rtgae/decoder.hpp"

#include <numeric>

namespace rtgae {

namespace {

struct Frame {
  Nonterminal nt;
  Var x;
};

class Expander {
 public:
  Expander(const Model& model, Var z, const Nonterminal& start) : model_(model) {
    stack_.push_back(Frame{start, z});
  }

  bool empty() const { return stack_.empty(); }

  Frame pop() {
    Frame f = std::move(stack_.back());
    stack_.pop_back();
    return f;
  }

  void apply(const Frame& f, std::size_t r) {
    auto ys = child_codes(model_, r, f.x);
    const Rule& rule = model_.grammar().rule(r);
    for (std::size_t j = ys.size(); j-- > 0;) stack_.push_back(Frame{rule.rhs[j], ys[j]});
  }

  std::vector<Nonterminal> pending() const {
    std::vector<Nonterminal> out;
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) out.push_back(it->nt);
    return out;
  }

 private:
  const Model& model_;
  std::vector<Frame> stack_;
};

std::size_t key_of(const Model& model, const Nonterminal& A) {
  auto key = model.grammar().expandable_index(A);
  if (!key) throw std::invalid_argument("unknown nonterminal " + A.str());
  if (model.grammar().rules_for(*key).empty())
    throw std::invalid_argument("nonterminal " + A.str() + " has no rules");
  return *key;
}

std::size_t argmax_lowest(const Vector& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

std::size_t sample_index(const Vector& p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = static_cast<std::size_t>(i);
    cum += p[i];
    if (u < cum) return last_positive;
  }
  return last_positive;
}

}  // namespace

double DecodeTrace::log_probability() const {
  double lp = 0.0;
  for (double p : probabilities) lp += std::log(p);
  return lp;
}

DecodeBudgetError::DecodeBudgetError(std::size_t max_rules, DecodeTrace partial,
                                     std::vector<Nonterminal> pending)
    : std::runtime_error("decoding exceeded the budget of " + std::to_string(max_rules) +
                         " rules with " + std::to_string(pending.size()) +
                         " nonterminal(s) still open"),
      partial_(std::move(partial)),
      pending_(std::move(pending)) {}

Var score_rules(const Model& model, const Nonterminal& A, Var x) {
  const auto& s = model.scoring()[key_of(model, A)];
  return affine(s.V, x, s.b);
}

Vector score_rules(const Model& model, const Nonterminal& A, const Vector& x) {
  Tape tape(model.params());
  return score_rules(model, A, tape.constant(x)).value();
}

std::vector<Var> child_codes(const Model& model, std::size_t r, Var x) {
  const auto& dec = model.child_decoders()[r];
  const std::size_t k = model.grammar().rule(r).rhs.size();
  std::vector<Var> ys;
  ys.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Var y;
    if (j == 0 && dec.gru) {
      y = gru_cell(*dec.gru, x, x.tape->param(*dec.embedding));
    } else {
      y = tanh(affine(dec.W[j], x, dec.c[j]));
    }
    ys.push_back(y);
    if (j + 1 < k) x = x - y;
  }
  return ys;
}

Decoded decode(const Model& model, const Vector& z, const Nonterminal& A, DecodeMode mode,
               Rng* rng, std::optional<std::size_t> max_rules) {
  if (!A.is_plain()) throw std::invalid_argument("decoding must start from a plain nonterminal");
  if (mode == DecodeMode::kSample && !rng)
    throw std::invalid_argument("sampling mode needs a random number generator");
  const std::size_t budget = max_rules.value_or(model.config().max_rules);
  if (budget < 1) throw std::invalid_argument("max_rules must be at least 1");
  key_of(model, A);

  const auto& g = model.grammar();
  Tape tape(model.params());
  Expander ex(model, tape.constant(z), A);
  DecodeTrace trace;
  while (!ex.empty()) {
    if (trace.rules.size() == budget) throw DecodeBudgetError(budget, std::move(trace), ex.pending());
    Frame f = ex.pop();
    const std::size_t key = *g.expandable_index(f.nt);
    Vector logits = score_rules(model, f.nt, f.x).value();
    Vector p = softmax(logits);
    std::size_t l = mode == DecodeMode::kGreedy ? argmax_lowest(logits) : sample_index(p, *rng);
    const std::size_t r = g.rules_for(key)[l];
    trace.rules.push_back(r);
    trace.codes.push_back(f.x.value());
    trace.probabilities.push_back(p[static_cast<Eigen::Index>(l)]);
    trace.logits.push_back(std::move(logits));
    ex.apply(f, r);
  }
  Tree tree = generate(g, A, trace.rules);
  return Decoded{std::move(tree), std::move(trace)};
}

Var teacher_forced_crossentropy(const Model& model, Var z, const Nonterminal& start,
                                std::span<const std::size_t> rules) {
  using Kind = GenerateError::Kind;
  const auto& g = model.grammar();
  Expander ex(model, z, start);
  Var total = z.tape->zeros(1);
  for (std::size_t t = 0; t < rules.size(); ++t) {
    const std::size_t r = rules[t];
    if (r >= g.rules().size())
      throw GenerateError(Kind::kUnknownRule, t, "rule " + std::to_string(r) + " does not exist");
    if (ex.empty()) throw GenerateError(Kind::kStackEmptiedEarly, t, "stack emptied early");
    Frame f = ex.pop();
    if (g.rule(r).lhs != f.nt)
      throw GenerateError(Kind::kLhsMismatch, t,
                          "rule " + std::to_string(r) + " cannot expand " + f.nt.str());
    total = total + softmax_xent(score_rules(model, f.nt, f.x), g.local_index(r));
    ex.apply(f, r);
  }
  if (!ex.empty())
    throw GenerateError(Kind::kStackNotEmpty, rules.size(), "rule sequence is incomplete");
  return total;
}

Tree complete_partial(const Model& model, const Nonterminal& start, const DecodeBudgetError& e) {
  RuleSequence seq = e.partial().rules;
  for (const auto& nt : e.pending()) {
    auto tail = cheapest_completion(model.grammar(), nt);
    seq.insert(seq.end(), tail.begin(), tail.end());
  }
  return generate(model.grammar(), start, seq);
}

}  // namespace rtgae
