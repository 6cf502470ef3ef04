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
#include <limits>

#include "rtgae/grammar.hpp"

namespace rtgae {

namespace {

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

struct ArenaNode {
  std::string label;
  std::vector<std::size_t> children;
};

Tree assemble(const std::vector<ArenaNode>& arena, std::size_t id) {
  Tree t(arena[id].label);
  t.children.reserve(arena[id].children.size());
  for (auto c : arena[id].children) t.children.push_back(assemble(arena, c));
  return t;
}

}  // namespace

Tree generate(const RegularTreeGrammar& g, const Nonterminal& start,
              std::span<const std::size_t> rules) {
  using Kind = GenerateError::Kind;
  if (!start.is_plain() || !g.expandable_index(start))
    throw GenerateError(Kind::kBadStart, 0, "start '" + start.str() + "' is not a plain nonterminal of the grammar");

  std::vector<ArenaNode> arena;
  std::vector<std::pair<Nonterminal, std::size_t>> stack;
  stack.emplace_back(start, kNoParent);
  std::size_t root = kNoParent;

  for (std::size_t t = 0; t < rules.size(); ++t) {
    const std::size_t r = rules[t];
    if (r >= g.rules().size())
      throw GenerateError(Kind::kUnknownRule, t, "rule " + std::to_string(r) + " at position " +
                                                     std::to_string(t) + " does not exist");
    if (stack.empty())
      throw GenerateError(Kind::kStackEmptiedEarly, t,
                          "stack emptied before position " + std::to_string(t) + " of " +
                              std::to_string(rules.size()) + " rules");
    auto [nt, parent] = std::move(stack.back());
    stack.pop_back();
    const Rule& rule = g.rule(r);
    if (rule.lhs != nt)
      throw GenerateError(Kind::kLhsMismatch, t,
                          "rule '" + to_string(rule) + "' at position " + std::to_string(t) +
                              " cannot expand " + nt.str());
    std::size_t owner = parent;
    if (!rule.pseudo) {
      owner = arena.size();
      arena.push_back(ArenaNode{rule.terminal, {}});
      if (parent == kNoParent) {
        root = owner;
      } else {
        arena[parent].children.push_back(owner);
      }
    }
    for (auto it = rule.rhs.rbegin(); it != rule.rhs.rend(); ++it) stack.emplace_back(*it, owner);
  }
  if (!stack.empty() || root == kNoParent)
    throw GenerateError(Kind::kStackNotEmpty, rules.size(),
                        "stack still holds " + std::to_string(stack.size()) +
                            " nonterminal(s) after the last rule");
  return assemble(arena, root);
}

namespace {

// Matches child nonterminals against a right-hand side read as a regular
// expression. counts[i] is the number of children assigned to slot i.
// Greedy first; backtracks only when the greedy choice fails.
bool match_slots(std::span<const Nonterminal> slots, std::size_t i,
                 std::span<const std::string> names, std::size_t pos,
                 std::vector<std::size_t>& counts) {
  if (i == slots.size()) return pos == names.size();
  const Nonterminal& slot = slots[i];
  switch (slot.kind) {
    case NonterminalKind::kPlain:
      if (pos < names.size() && names[pos] == slot.name) {
        counts[i] = 1;
        return match_slots(slots, i + 1, names, pos + 1, counts);
      }
      return false;
    case NonterminalKind::kOptional:
      if (pos < names.size() && names[pos] == slot.name) {
        counts[i] = 1;
        if (match_slots(slots, i + 1, names, pos + 1, counts)) return true;
      }
      counts[i] = 0;
      return match_slots(slots, i + 1, names, pos, counts);
    case NonterminalKind::kStarred: {
      std::size_t run = 0;
      while (pos + run < names.size() && names[pos + run] == slot.name) ++run;
      for (std::size_t c = run + 1; c-- > 0;) {
        counts[i] = c;
        if (match_slots(slots, i + 1, names, pos + c, counts)) return true;
      }
      return false;
    }
  }
  return false;
}

struct Parsed {
  std::string nonterminal;
  RuleSequence rules;
};

Parsed parse_node(const RegularTreeGrammar& g, const Tree& t) {
  std::vector<std::string> names;
  std::vector<RuleSequence> child_rules;
  names.reserve(t.children.size());
  child_rules.reserve(t.children.size());
  for (const auto& c : t.children) {
    Parsed p = parse_node(g, c);
    names.push_back(std::move(p.nonterminal));
    child_rules.push_back(std::move(p.rules));
  }

  std::vector<std::size_t> matches;
  std::vector<std::vector<std::size_t>> assignments;
  if (!g.has_regex_rules()) {
    matches = g.plain_rules_matching(t.label, names);
  } else {
    for (std::size_t r : g.rules_with_terminal(t.label)) {
      const Rule& rule = g.rule(r);
      std::vector<std::size_t> counts(rule.rhs.size(), 0);
      if (match_slots(rule.rhs, 0, names, 0, counts)) {
        matches.push_back(r);
        assignments.push_back(std::move(counts));
      }
    }
  }

  if (matches.empty()) {
    std::string kids;
    for (std::size_t j = 0; j < names.size(); ++j) kids += (j ? ", " : "") + names[j];
    throw ParseError("no rule matches " + t.label + "(" + kids + ") at subtree " + to_string(t),
                     to_string(t));
  }
  if (matches.size() > 1) {
    std::string which;
    for (auto r : matches) which += "\n  " + to_string(g.rule(r));
    throw ParseError("ambiguous match at subtree " + to_string(t) + "; candidates:" + which,
                     to_string(t));
  }

  const std::size_t r = matches.front();
  const Rule& rule = g.rule(r);
  Parsed out{rule.lhs.name, {r}};
  if (!g.has_regex_rules()) {
    for (auto& cr : child_rules) out.rules.insert(out.rules.end(), cr.begin(), cr.end());
    return out;
  }
  const auto& counts = assignments.front();
  std::size_t child = 0;
  for (std::size_t i = 0; i < rule.rhs.size(); ++i) {
    const Nonterminal& slot = rule.rhs[i];
    auto append_child = [&] {
      out.rules.insert(out.rules.end(), child_rules[child].begin(), child_rules[child].end());
      ++child;
    };
    if (slot.is_plain()) {
      append_child();
      continue;
    }
    auto [more, none] = g.pseudo_rules(slot);
    for (std::size_t c = 0; c < counts[i]; ++c) {
      out.rules.push_back(more);
      append_child();
    }
    if (slot.kind == NonterminalKind::kStarred || counts[i] == 0) out.rules.push_back(none);
  }
  return out;
}

}  // namespace

ParseResult parse(const RegularTreeGrammar& g, const Tree& tree) {
  Parsed p = parse_node(g, tree);
  return ParseResult{std::move(p.nonterminal), std::move(p.rules)};
}

bool in_language(const RegularTreeGrammar& g, const Tree& tree) {
  try {
    return g.is_start(parse(g, tree).nonterminal);
  } catch (const ParseError&) {
    return false;
  }
}

namespace {

constexpr std::size_t kInfinite = std::numeric_limits<std::size_t>::max();

std::vector<std::size_t> completion_costs(const RegularTreeGrammar& g) {
  std::vector<std::size_t> cost(g.expandables().size(), kInfinite);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t r = 0; r < g.rules().size(); ++r) {
      std::size_t c = 1;
      for (const auto& b : g.rule(r).rhs) {
        std::size_t cb = cost[*g.expandable_index(b)];
        if (cb == kInfinite) {
          c = kInfinite;
          break;
        }
        c += cb;
      }
      std::size_t& slot = cost[g.lhs_key(r)];
      if (c < slot) {
        slot = c;
        changed = true;
      }
    }
  }
  return cost;
}

void append_completion(const RegularTreeGrammar& g, const std::vector<std::size_t>& cost,
                       std::size_t key, RuleSequence& out) {
  std::size_t best = kInfinite, best_cost = kInfinite;
  for (std::size_t r : g.rules_for(key)) {
    std::size_t c = 1;
    for (const auto& b : g.rule(r).rhs) {
      std::size_t cb = cost[*g.expandable_index(b)];
      if (cb == kInfinite) {
        c = kInfinite;
        break;
      }
      c += cb;
    }
    if (c < best_cost) {
      best_cost = c;
      best = r;
    }
  }
  out.push_back(best);
  for (const auto& b : g.rule(best).rhs) append_completion(g, cost, *g.expandable_index(b), out);
}

}  // namespace

RuleSequence cheapest_completion(const RegularTreeGrammar& g, const Nonterminal& nt) {
  auto key = g.expandable_index(nt);
  if (!key) throw GrammarError("unknown nonterminal " + nt.str());
  auto cost = completion_costs(g);
  if (cost[*key] == kInfinite) throw GrammarError("nonterminal " + nt.str() + " is unproductive");
  RuleSequence out;
  append_completion(g, cost, *key, out);
  return out;
}

LintReport lint(const RegularTreeGrammar& g) {
  LintReport rep;
  rep.empty = g.num_user_rules() == 0;
  auto cost = completion_costs(g);
  for (const auto& a : g.nonterminals())
    if (cost[*g.expandable_index(Nonterminal(a))] == kInfinite) rep.unproductive.push_back(a);

  std::vector<bool> seen(g.expandables().size(), false);
  std::vector<std::size_t> todo;
  for (const auto& s : g.starts()) {
    std::size_t k = *g.expandable_index(Nonterminal(s));
    if (!seen[k]) {
      seen[k] = true;
      todo.push_back(k);
    }
  }
  while (!todo.empty()) {
    std::size_t k = todo.back();
    todo.pop_back();
    for (std::size_t r : g.rules_for(k)) {
      for (const auto& b : g.rule(r).rhs) {
        std::size_t kb = *g.expandable_index(b);
        if (!seen[kb]) {
          seen[kb] = true;
          todo.push_back(kb);
        }
      }
    }
  }
  for (const auto& a : g.nonterminals())
    if (!seen[*g.expandable_index(Nonterminal(a))]) rep.unreachable.push_back(a);
  return rep;
}

}  // namespace rtgae
