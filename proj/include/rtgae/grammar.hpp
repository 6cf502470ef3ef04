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

// Regular tree grammars with optional (B?) and starred (B*) nonterminals.
//
// Rules are identified by their index in RegularTreeGrammar::rules(). User
// rules come first, in declaration order. For every optional or starred
// nonterminal used on some right-hand side, two pseudo-rules are appended:
//
//   B? -> B      B? -> (empty)      B* -> B, B*      B* -> (empty)
//
// Pseudo-rules have no terminal and produce no tree node; they appear in rule
// sequences so that a sequence fully determines its derivation.

#ifndef RTGAE_GRAMMAR_HPP_
#define RTGAE_GRAMMAR_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rtgae/rng.hpp"
#include "rtgae/tree.hpp"

namespace rtgae {

enum class NonterminalKind { kPlain, kOptional, kStarred };

struct Nonterminal {
  std::string name;
  NonterminalKind kind = NonterminalKind::kPlain;

  Nonterminal() = default;
  Nonterminal(std::string n, NonterminalKind k = NonterminalKind::kPlain)
      : name(std::move(n)), kind(k) {}
  Nonterminal(const char* n) : name(n) {}

  bool is_plain() const { return kind == NonterminalKind::kPlain; }
  Nonterminal base() const { return Nonterminal(name); }
  /// "B", "B?" or "B*".
  std::string str() const;

  friend bool operator==(const Nonterminal&, const Nonterminal&) = default;
  friend auto operator<=>(const Nonterminal&, const Nonterminal&) = default;
};

struct Rule {
  Nonterminal lhs;
  std::string terminal;  ///< empty for pseudo-rules
  std::vector<Nonterminal> rhs;
  bool pseudo = false;

  std::size_t arity() const { return rhs.size(); }
};

std::string to_string(const Rule& r);

using RuleSequence = std::vector<std::size_t>;

class GrammarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegularTreeGrammar {
 public:
  /// Builds Φ from rule left-hand sides, right-hand-side base names, starts
  /// and `extra_nonterminals`; Σ from rule terminals. Throws GrammarError on
  /// malformed input (non-plain lhs or start, empty starts, name clashes).
  RegularTreeGrammar(std::vector<Rule> rules, std::vector<std::string> starts,
                     std::vector<std::string> extra_nonterminals = {});

  static RegularTreeGrammar from_text(std::string_view text);
  /// Writes the format from_text reads; pseudo-rules are implicit.
  std::string to_text() const;

  const std::vector<std::string>& nonterminals() const { return nonterminals_; }
  const std::vector<std::string>& alphabet() const { return alphabet_; }
  const std::vector<std::string>& starts() const { return starts_; }
  bool is_start(std::string_view name) const;

  /// User rules followed by pseudo-rules.
  const std::vector<Rule>& rules() const { return rules_; }
  const Rule& rule(std::size_t r) const { return rules_.at(r); }
  std::size_t num_user_rules() const { return num_user_rules_; }
  bool has_regex_rules() const { return num_user_rules_ != rules_.size(); }

  /// Every nonterminal that can be expanded: plain ones, then the optional
  /// and starred ones that occur on right-hand sides.
  const std::vector<Nonterminal>& expandables() const { return expandables_; }
  std::optional<std::size_t> expandable_index(const Nonterminal& nt) const;
  /// L_A: indices of the rules with left-hand side `expandables()[key]`.
  std::span<const std::size_t> rules_for(std::size_t key) const { return rules_for_[key]; }
  /// Position of rule r inside rules_for(key of its lhs).
  std::size_t local_index(std::size_t r) const { return local_index_[r]; }
  std::size_t lhs_key(std::size_t r) const { return lhs_key_[r]; }

  /// Pseudo-rule indices for an optional/starred nonterminal: {B?->B, B?->e}
  /// or {B*->B,B*, B*->e}.
  std::pair<std::size_t, std::size_t> pseudo_rules(const Nonterminal& nt) const;

  /// Index of the user rule with this terminal and plain rhs, if any. Only
  /// meaningful for rules without regex slots.
  std::vector<std::size_t> plain_rules_matching(std::string_view terminal,
                                                std::span<const std::string> children) const;
  std::span<const std::size_t> rules_with_terminal(std::string_view terminal) const;

  /// FNV-1a over to_text().
  std::uint64_t hash() const;

 private:
  std::vector<std::string> nonterminals_;
  std::vector<std::string> alphabet_;
  std::vector<std::string> starts_;
  std::vector<Rule> rules_;
  std::size_t num_user_rules_ = 0;
  std::vector<Nonterminal> expandables_;
  std::unordered_map<std::string, std::size_t> expandable_index_;
  std::vector<std::vector<std::size_t>> rules_for_;
  std::vector<std::size_t> local_index_;
  std::vector<std::size_t> lhs_key_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_terminal_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_plain_rhs_;
};

// -- generation and parsing -------------------------------------------------

class GenerateError : public std::runtime_error {
 public:
  enum class Kind { kLhsMismatch, kStackEmptiedEarly, kStackNotEmpty, kUnknownRule, kBadStart };
  GenerateError(Kind kind, std::size_t position, const std::string& what)
      : std::runtime_error(what), kind_(kind), position_(position) {}
  Kind kind() const { return kind_; }
  /// Index into the rule sequence where generation failed.
  std::size_t position() const { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

/// Runs the stack process from `start`. The stack must empty exactly after
/// the last rule.
Tree generate(const RegularTreeGrammar& g, const Nonterminal& start,
              std::span<const std::size_t> rules);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string subtree)
      : std::runtime_error(what), subtree_(std::move(subtree)) {}
  /// Text of the subtree that could not be matched.
  const std::string& subtree() const { return subtree_; }

 private:
  std::string subtree_;
};

struct ParseResult {
  std::string nonterminal;
  RuleSequence rules;
};

/// Bottom-up parse. Right-hand sides with optional/starred slots are matched
/// as regular expressions over child nonterminals. Throws ParseError if no
/// rule matches some subtree, or if more than one does.
ParseResult parse(const RegularTreeGrammar& g, const Tree& tree);

/// True iff parse succeeds and yields a start nonterminal.
bool in_language(const RegularTreeGrammar& g, const Tree& tree);

// -- determinism -------------------------------------------------------------

struct DeterminismViolation {
  int condition = 0;  ///< 1: adjacent equal optional/starred slots; 2: overlapping rules
  std::vector<std::size_t> rules;
  std::string message;
};

struct DeterminismReport {
  std::vector<DeterminismViolation> violations;
  bool deterministic() const { return violations.empty(); }
};

DeterminismReport check_deterministic(const RegularTreeGrammar& g);

/// Subset construction. Output nonterminals are sets of input nonterminals,
/// named "{A,B,...}" with members sorted. Throws GrammarError if the input
/// uses optional or starred nonterminals.
RegularTreeGrammar determinize(const RegularTreeGrammar& g);

struct LintReport {
  bool empty = false;
  std::vector<std::string> unreachable;
  std::vector<std::string> unproductive;
  bool clean() const { return !empty && unreachable.empty() && unproductive.empty(); }
};

LintReport lint(const RegularTreeGrammar& g);

/// Fewest-rule derivation from `nt`; throws GrammarError if `nt` is unproductive.
RuleSequence cheapest_completion(const RegularTreeGrammar& g, const Nonterminal& nt);

// -- enumeration and sampling -----------------------------------------------

struct EnumerationLimits {
  std::size_t max_size_cap = 10;
  std::size_t max_trees = 2'000'000;
};

class EnumerationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All trees of size <= max_size derivable from some start nonterminal.
std::set<Tree> language_enumerate(const RegularTreeGrammar& g, std::size_t max_size,
                                  const EnumerationLimits& limits = {});

/// Same, from a single plain nonterminal.
std::set<Tree> language_enumerate_from(const RegularTreeGrammar& g, std::string_view nonterminal,
                                       std::size_t max_size, const EnumerationLimits& limits = {});

struct SampleOptions {
  std::size_t max_rules = 100;
  std::size_t max_retries = 1000;
};

class SampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random derivation choosing rules of each nonterminal proportional to
/// `rule_weights` (indexed like g.rules(); empty means uniform). Derivations
/// longer than max_rules are discarded and retried.
Tree sample_tree(const RegularTreeGrammar& g, const Nonterminal& start,
                 std::span<const double> rule_weights, Rng& rng, const SampleOptions& opts = {});

}  // namespace rtgae

#endif  // RTGAE_GRAMMAR_HPP_
