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

#include <algorithm>
#include <map>
#include <set>

#include "rtgae/grammar.hpp"

namespace rtgae {

namespace {

// Thompson-style automaton for a right-hand side. State i means "slots < i
// are done"; the last state accepts.
struct SlotAutomaton {
  struct Edge {
    std::size_t from;
    std::string label;  // empty: epsilon
    std::size_t to;
  };
  std::size_t accept = 0;
  std::vector<Edge> edges;

  explicit SlotAutomaton(std::span<const Nonterminal> slots) : accept(slots.size()) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& s = slots[i];
      switch (s.kind) {
        case NonterminalKind::kPlain:
          edges.push_back({i, s.name, i + 1});
          break;
        case NonterminalKind::kOptional:
          edges.push_back({i, s.name, i + 1});
          edges.push_back({i, "", i + 1});
          break;
        case NonterminalKind::kStarred:
          edges.push_back({i, s.name, i});
          edges.push_back({i, "", i + 1});
          break;
      }
    }
  }
};

// Product construction: do the two right-hand sides share a word?
bool languages_intersect(const SlotAutomaton& a, const SlotAutomaton& b) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::pair<std::size_t, std::size_t>> todo{{0, 0}};
  seen.insert({0, 0});
  auto visit = [&](std::size_t p, std::size_t q) {
    if (seen.insert({p, q}).second) todo.emplace_back(p, q);
  };
  while (!todo.empty()) {
    auto [p, q] = todo.back();
    todo.pop_back();
    if (p == a.accept && q == b.accept) return true;
    for (const auto& ea : a.edges) {
      if (ea.from != p) continue;
      if (ea.label.empty()) {
        visit(ea.to, q);
        continue;
      }
      for (const auto& eb : b.edges)
        if (eb.from == q && eb.label == ea.label) visit(ea.to, eb.to);
    }
    for (const auto& eb : b.edges)
      if (eb.from == q && eb.label.empty()) visit(p, eb.to);
  }
  return false;
}

}  // namespace

DeterminismReport check_deterministic(const RegularTreeGrammar& g) {
  DeterminismReport rep;
  const auto& rules = g.rules();
  for (std::size_t r = 0; r < g.num_user_rules(); ++r) {
    const auto& rhs = rules[r].rhs;
    for (std::size_t j = 0; j + 1 < rhs.size(); ++j) {
      if (rhs[j].name == rhs[j + 1].name && !rhs[j].is_plain() && !rhs[j + 1].is_plain()) {
        rep.violations.push_back(
            {1, {r},
             "rule " + std::to_string(r) + " '" + to_string(rules[r]) + "': adjacent slots " +
                 rhs[j].str() + ", " + rhs[j + 1].str() + " cannot be told apart"});
      }
    }
  }
  std::vector<SlotAutomaton> automata;
  automata.reserve(g.num_user_rules());
  for (std::size_t r = 0; r < g.num_user_rules(); ++r) automata.emplace_back(rules[r].rhs);
  for (std::size_t r = 0; r < g.num_user_rules(); ++r) {
    for (std::size_t s = r + 1; s < g.num_user_rules(); ++s) {
      if (rules[r].terminal != rules[s].terminal) continue;
      if (languages_intersect(automata[r], automata[s])) {
        rep.violations.push_back({2, {r, s},
                                  "rules " + std::to_string(r) + " '" + to_string(rules[r]) +
                                      "' and " + std::to_string(s) + " '" +
                                      to_string(rules[s]) + "' have overlapping right-hand sides"});
      }
    }
  }
  return rep;
}

namespace {

using StateSet = std::set<std::string>;

std::string set_name(const StateSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& a : s) {
    if (!first) out += ',';
    out += a;
    first = false;
  }
  return out + "}";
}

}  // namespace

RegularTreeGrammar determinize(const RegularTreeGrammar& g) {
  if (g.has_regex_rules())
    throw GrammarError("determinize supports only grammars without optional/starred nonterminals");

  // rule groups by (terminal, arity), in order of first appearance
  std::vector<std::pair<std::string, std::size_t>> groups;
  std::vector<std::vector<std::size_t>> group_rules;
  for (std::size_t r = 0; r < g.num_user_rules(); ++r) {
    std::pair<std::string, std::size_t> key{g.rule(r).terminal, g.rule(r).arity()};
    auto it = std::find(groups.begin(), groups.end(), key);
    if (it == groups.end()) {
      groups.push_back(key);
      group_rules.push_back({r});
    } else {
      group_rules[it - groups.begin()].push_back(r);
    }
  }

  std::vector<StateSet> sets;
  std::map<StateSet, std::size_t> set_index;
  // (group, child set indices) -> lhs set index
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> transitions;

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const std::size_t k = groups[gi].second;
      if (k > 0 && sets.empty()) continue;
      std::vector<std::size_t> tuple(k, 0);
      const std::size_t known = sets.size();
      for (;;) {
        if (!transitions.count({gi, tuple})) {
          StateSet lhs;
          for (std::size_t r : group_rules[gi]) {
            const Rule& rule = g.rule(r);
            bool ok = true;
            for (std::size_t j = 0; j < k && ok; ++j) ok = sets[tuple[j]].count(rule.rhs[j].name) > 0;
            if (ok) lhs.insert(rule.lhs.name);
          }
          if (!lhs.empty()) {
            auto [it, inserted] = set_index.emplace(lhs, sets.size());
            if (inserted) sets.push_back(lhs);
            transitions.emplace(std::make_pair(gi, tuple), it->second);
            changed = true;
          }
        }
        std::size_t pos = 0;
        while (pos < k && ++tuple[pos] == known) tuple[pos++] = 0;
        if (pos == k) break;
      }
    }
  }

  std::vector<Rule> rules;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::vector<std::pair<std::vector<std::size_t>, std::size_t>> entries;
    for (const auto& [key, lhs] : transitions)
      if (key.first == gi) entries.emplace_back(key.second, lhs);
    std::sort(entries.begin(), entries.end());
    for (const auto& [tuple, lhs] : entries) {
      Rule rule{Nonterminal(set_name(sets[lhs])), groups[gi].first, {}, false};
      for (auto c : tuple) rule.rhs.emplace_back(set_name(sets[c]));
      rules.push_back(std::move(rule));
    }
  }
  std::vector<std::string> starts, names;
  for (const auto& s : sets) {
    names.push_back(set_name(s));
    bool start = std::any_of(s.begin(), s.end(), [&](const std::string& a) { return g.is_start(a); });
    if (start) starts.push_back(set_name(s));
  }
  if (starts.empty()) starts.push_back("{}");
  return RegularTreeGrammar(std::move(rules), std::move(starts), std::move(names));
}

}  // namespace rtgae
