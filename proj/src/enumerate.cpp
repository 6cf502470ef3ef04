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

#include <numeric>

#include "rtgae/grammar.hpp"

namespace rtgae {

namespace {

// exact[a][n]: trees of size exactly n derivable from plain nonterminal a.
// Built by increasing n: a tree x(y_1..y_k) of size n needs a rule
// A -> x(B_1..B_k) and children of sizes summing to n - 1.
class Enumerator {
 public:
  Enumerator(const RegularTreeGrammar& g, std::size_t max_size, const EnumerationLimits& limits)
      : g_(g), limits_(limits) {
    if (max_size > limits.max_size_cap)
      throw EnumerationLimitError("max_size " + std::to_string(max_size) +
                                  " exceeds the enumeration cap " +
                                  std::to_string(limits.max_size_cap));
    const std::size_t m = g.nonterminals().size();
    exact_.assign(m, std::vector<std::vector<Tree>>(max_size + 1));
    for (std::size_t n = 1; n <= max_size; ++n) {
      std::vector<std::set<Tree>> level(m);
      for (std::size_t r = 0; r < g.num_user_rules(); ++r) {
        const Rule& rule = g.rule(r);
        std::size_t a = *g.expandable_index(rule.lhs);
        std::vector<Tree> kids;
        expand(rule, 0, n - 1, kids, level[a]);
      }
      for (std::size_t a = 0; a < m; ++a) {
        total_ += level[a].size();
        if (total_ > limits.max_trees)
          throw EnumerationLimitError("enumeration exceeds " + std::to_string(limits.max_trees) +
                                      " trees");
        exact_[a][n].assign(level[a].begin(), level[a].end());
      }
    }
  }

  std::set<Tree> upto(std::string_view name, std::size_t max_size) const {
    std::set<Tree> out;
    auto key = g_.expandable_index(Nonterminal(std::string(name)));
    if (!key) throw GrammarError("unknown nonterminal " + std::string(name));
    for (std::size_t n = 1; n <= max_size; ++n)
      out.insert(exact_[*key][n].begin(), exact_[*key][n].end());
    return out;
  }

 private:
  void expand(const Rule& rule, std::size_t slot, std::size_t remaining, std::vector<Tree>& kids,
              std::set<Tree>& out) {
    if (slot == rule.rhs.size()) {
      if (remaining == 0) out.insert(Tree(rule.terminal, kids));
      return;
    }
    const Nonterminal& s = rule.rhs[slot];
    if (!s.is_plain()) expand(rule, slot + 1, remaining, kids, out);
    const std::size_t b = *g_.expandable_index(s.base());
    // a starred slot stays on the same slot after taking one element
    const std::size_t next = s.kind == NonterminalKind::kStarred ? slot : slot + 1;
    for (std::size_t size = 1; size <= remaining; ++size) {
      for (const Tree& t : exact_[b][size]) {
        kids.push_back(t);
        expand(rule, next, remaining - size, kids, out);
        kids.pop_back();
      }
    }
  }

  const RegularTreeGrammar& g_;
  EnumerationLimits limits_;
  std::vector<std::vector<std::vector<Tree>>> exact_;
  std::size_t total_ = 0;
};

}  // namespace

std::set<Tree> language_enumerate(const RegularTreeGrammar& g, std::size_t max_size,
                                  const EnumerationLimits& limits) {
  Enumerator e(g, max_size, limits);
  std::set<Tree> out;
  for (const auto& s : g.starts()) out.merge(e.upto(s, max_size));
  return out;
}

std::set<Tree> language_enumerate_from(const RegularTreeGrammar& g, std::string_view nonterminal,
                                       std::size_t max_size, const EnumerationLimits& limits) {
  return Enumerator(g, max_size, limits).upto(nonterminal, max_size);
}

Tree sample_tree(const RegularTreeGrammar& g, const Nonterminal& start,
                 std::span<const double> rule_weights, Rng& rng, const SampleOptions& opts) {
  if (!rule_weights.empty() && rule_weights.size() != g.rules().size())
    throw SampleError("expected " + std::to_string(g.rules().size()) + " rule weights");
  auto weight = [&](std::size_t r) { return rule_weights.empty() ? 1.0 : rule_weights[r]; };
  for (double w : rule_weights)
    if (!(w >= 0.0)) throw SampleError("rule weights must be nonnegative");

  for (std::size_t attempt = 0; attempt < opts.max_retries; ++attempt) {
    RuleSequence seq;
    std::vector<Nonterminal> stack{start};
    bool aborted = false;
    while (!stack.empty()) {
      if (seq.size() >= opts.max_rules) {
        aborted = true;
        break;
      }
      Nonterminal nt = std::move(stack.back());
      stack.pop_back();
      auto key = g.expandable_index(nt);
      if (!key) throw SampleError("unknown nonterminal " + nt.str());
      auto choices = g.rules_for(*key);
      double total = 0.0;
      for (auto r : choices) total += weight(r);
      if (!(total > 0.0)) throw SampleError("no positive rule weight for " + nt.str());
      double u = rng.uniform(0.0, total);
      std::size_t pick = choices.back();
      for (auto r : choices) {
        if (weight(r) <= 0.0) continue;
        pick = r;
        if (u < weight(r)) {
          pick = r;
          break;
        }
        u -= weight(r);
      }
      seq.push_back(pick);
      const auto& rhs = g.rule(pick).rhs;
      for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) stack.push_back(*it);
    }
    if (!aborted) return generate(g, start, seq);
  }
  throw SampleError("no derivation within " + std::to_string(opts.max_rules) + " rules after " +
                    std::to_string(opts.max_retries) + " attempts");
}

}  // namespace rtgae
