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

#include "rtgae/grammar.hpp"

#include <algorithm>
#include <unordered_set>

#include "lexer.hpp"

namespace rtgae {

std::string Nonterminal::str() const {
  switch (kind) {
    case NonterminalKind::kOptional: return name + "?";
    case NonterminalKind::kStarred: return name + "*";
    default: return name;
  }
}

std::string to_string(const Rule& r) {
  std::string out = r.lhs.str() + " -> ";
  if (r.pseudo) {
    if (r.rhs.empty()) return out + "<empty>";
    for (std::size_t j = 0; j < r.rhs.size(); ++j) {
      if (j > 0) out += ", ";
      out += r.rhs[j].str();
    }
    return out;
  }
  out += r.terminal;
  if (r.rhs.empty()) return out;
  out += '(';
  for (std::size_t j = 0; j < r.rhs.size(); ++j) {
    if (j > 0) out += ", ";
    out += r.rhs[j].str();
  }
  return out + ')';
}

namespace {

std::string plain_key(std::string_view terminal, std::span<const std::string> children) {
  std::string key(terminal);
  for (const auto& c : children) {
    key += '\x1f';
    key += c;
  }
  return key;
}

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

RegularTreeGrammar::RegularTreeGrammar(std::vector<Rule> rules, std::vector<std::string> starts,
                                       std::vector<std::string> extra_nonterminals) {
  if (starts.empty()) throw GrammarError("grammar needs at least one start nonterminal");
  for (const auto& r : rules) {
    if (r.pseudo) throw GrammarError("pseudo-rules are implicit and cannot be declared");
    if (!r.lhs.is_plain())
      throw GrammarError("optional/starred nonterminal " + r.lhs.str() +
                         " cannot be a left-hand side");
    if (r.lhs.name.empty() || r.terminal.empty())
      throw GrammarError("rule with empty nonterminal or terminal");
    push_unique(nonterminals_, r.lhs.name);
    for (const auto& b : r.rhs) {
      if (b.name.empty()) throw GrammarError("empty nonterminal name in " + to_string(r));
      push_unique(nonterminals_, b.name);
    }
    push_unique(alphabet_, r.terminal);
  }
  for (const auto& s : starts) {
    if (s.empty() || s.back() == '*' || s.back() == '?')
      throw GrammarError("start symbol must be a plain nonterminal: '" + s + "'");
    push_unique(nonterminals_, s);
    push_unique(starts_, s);
  }
  for (const auto& s : extra_nonterminals) push_unique(nonterminals_, s);
  for (const auto& a : alphabet_) {
    if (std::find(nonterminals_.begin(), nonterminals_.end(), a) != nonterminals_.end())
      throw GrammarError("'" + a + "' is used both as terminal and as nonterminal");
  }

  rules_ = std::move(rules);
  num_user_rules_ = rules_.size();

  for (const auto& a : nonterminals_) expandables_.emplace_back(a);
  std::vector<Nonterminal> regex_slots;
  for (std::size_t r = 0; r < num_user_rules_; ++r) {
    for (const auto& b : rules_[r].rhs)
      if (!b.is_plain()) push_unique(regex_slots, b);
  }
  for (const auto& b : regex_slots) {
    expandables_.push_back(b);
    if (b.kind == NonterminalKind::kOptional) {
      rules_.push_back(Rule{b, "", {b.base()}, true});
    } else {
      rules_.push_back(Rule{b, "", {b.base(), b}, true});
    }
    rules_.push_back(Rule{b, "", {}, true});
  }

  for (std::size_t k = 0; k < expandables_.size(); ++k)
    expandable_index_.emplace(expandables_[k].str(), k);
  rules_for_.resize(expandables_.size());
  local_index_.resize(rules_.size());
  lhs_key_.resize(rules_.size());
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    std::size_t key = expandable_index_.at(rules_[r].lhs.str());
    lhs_key_[r] = key;
    local_index_[r] = rules_for_[key].size();
    rules_for_[key].push_back(r);
  }

  for (std::size_t r = 0; r < num_user_rules_; ++r) {
    const Rule& rule = rules_[r];
    by_terminal_[rule.terminal].push_back(r);
    bool plain = std::all_of(rule.rhs.begin(), rule.rhs.end(),
                             [](const Nonterminal& b) { return b.is_plain(); });
    if (plain) {
      std::vector<std::string> names;
      for (const auto& b : rule.rhs) names.push_back(b.name);
      by_plain_rhs_[plain_key(rule.terminal, names)].push_back(r);
    }
  }
}

bool RegularTreeGrammar::is_start(std::string_view name) const {
  return std::find(starts_.begin(), starts_.end(), name) != starts_.end();
}

std::optional<std::size_t> RegularTreeGrammar::expandable_index(const Nonterminal& nt) const {
  auto it = expandable_index_.find(nt.str());
  if (it == expandable_index_.end()) return std::nullopt;
  return it->second;
}

std::pair<std::size_t, std::size_t> RegularTreeGrammar::pseudo_rules(const Nonterminal& nt) const {
  auto key = expandable_index(nt);
  if (!key || nt.is_plain()) throw GrammarError("no pseudo-rules for " + nt.str());
  const auto& rs = rules_for_[*key];
  return {rs[0], rs[1]};
}

std::vector<std::size_t> RegularTreeGrammar::plain_rules_matching(
    std::string_view terminal, std::span<const std::string> children) const {
  auto it = by_plain_rhs_.find(plain_key(terminal, children));
  if (it == by_plain_rhs_.end()) return {};
  return it->second;
}

std::span<const std::size_t> RegularTreeGrammar::rules_with_terminal(
    std::string_view terminal) const {
  auto it = by_terminal_.find(std::string(terminal));
  if (it == by_terminal_.end()) return {};
  return it->second;
}

std::string RegularTreeGrammar::to_text() const {
  std::string out;
  for (const auto& s : starts_) out += "start " + s + ";\n";
  for (std::size_t r = 0; r < num_user_rules_; ++r) out += to_string(rules_[r]) + ";\n";
  return out;
}

std::uint64_t RegularTreeGrammar::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

Nonterminal read_nonterminal(const detail::Token& tok) {
  std::string name = tok.text;
  NonterminalKind kind = NonterminalKind::kPlain;
  if (!name.empty() && name.back() == '*') {
    kind = NonterminalKind::kStarred;
    name.pop_back();
  } else if (!name.empty() && name.back() == '?') {
    kind = NonterminalKind::kOptional;
    name.pop_back();
  }
  if (name.empty()) throw SyntaxError("empty nonterminal name", tok.line, tok.column);
  return {name, kind};
}

}  // namespace

RegularTreeGrammar RegularTreeGrammar::from_text(std::string_view text) {
  using detail::TokenKind;
  detail::Lexer lex(text);
  std::vector<Rule> rules;
  std::vector<std::string> starts;
  while (lex.peek().kind != TokenKind::kEnd) {
    auto head = lex.expect(TokenKind::kWord, "'start' or a nonterminal");
    if (head.text == "start" && lex.peek().kind == TokenKind::kWord) {
      for (;;) {
        auto s = lex.expect(TokenKind::kWord, "a start nonterminal");
        auto nt = read_nonterminal(s);
        if (!nt.is_plain())
          throw SyntaxError("start symbol must be a plain nonterminal", s.line, s.column);
        starts.push_back(nt.name);
        if (lex.peek().kind != TokenKind::kComma) break;
        lex.next();
      }
      lex.expect(TokenKind::kSemicolon, "';'");
      continue;
    }
    Nonterminal lhs = read_nonterminal(head);
    if (!lhs.is_plain())
      throw SyntaxError("optional/starred nonterminal cannot be a left-hand side", head.line,
                        head.column);
    lex.expect(TokenKind::kArrow, "'->'");
    auto term = lex.expect(TokenKind::kWord, "a terminal symbol");
    Rule rule{lhs, term.text, {}, false};
    if (lex.peek().kind == TokenKind::kLParen) {
      lex.next();
      if (lex.peek().kind != TokenKind::kRParen) {
        for (;;) {
          rule.rhs.push_back(read_nonterminal(lex.expect(TokenKind::kWord, "a nonterminal")));
          if (lex.peek().kind != TokenKind::kComma) break;
          lex.next();
        }
      }
      lex.expect(TokenKind::kRParen, "',' or ')'");
    }
    lex.expect(TokenKind::kSemicolon, "';'");
    rules.push_back(std::move(rule));
  }
  if (starts.empty()) throw SyntaxError("grammar declares no start symbol", 1, 1);
  return RegularTreeGrammar(std::move(rules), std::move(starts));
}

}  // namespace rtgae
