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

#include "rtgae/tree.hpp"

#include <algorithm>

#include "lexer.hpp"

namespace rtgae {

std::strong_ordering operator<=>(const Tree& a, const Tree& b) {
  if (auto c = a.label <=> b.label; c != 0) return c;
  return std::lexicographical_compare_three_way(a.children.begin(), a.children.end(),
                                                b.children.begin(), b.children.end());
}

std::size_t size(const Tree& t) {
  std::size_t n = 1;
  for (const auto& c : t.children) n += size(c);
  return n;
}

std::size_t depth(const Tree& t) {
  std::size_t d = 0;
  for (const auto& c : t.children) d = std::max(d, depth(c));
  return d + 1;
}

namespace {

void append_dfs(const Tree& t, std::vector<std::reference_wrapper<const Tree>>& out) {
  for (const auto& c : t.children) append_dfs(c, out);
  out.emplace_back(t);
}

Tree read_tree(detail::Lexer& lex) {
  using detail::TokenKind;
  auto label = lex.expect(TokenKind::kWord, "a symbol");
  Tree t(label.text);
  if (lex.peek().kind != TokenKind::kLParen) return t;
  lex.next();
  if (lex.peek().kind == TokenKind::kRParen) {
    lex.next();
    return t;
  }
  for (;;) {
    t.children.push_back(read_tree(lex));
    if (lex.peek().kind == TokenKind::kComma) {
      lex.next();
      continue;
    }
    lex.expect(TokenKind::kRParen, "',' or ')'");
    return t;
  }
}

void write_tree(const Tree& t, std::string& out) {
  out += t.label;
  if (t.children.empty()) return;
  out += '(';
  for (std::size_t i = 0; i < t.children.size(); ++i) {
    if (i > 0) out += ", ";
    write_tree(t.children[i], out);
  }
  out += ')';
}

}  // namespace

std::vector<std::reference_wrapper<const Tree>> dfs_list(const Tree& t) {
  std::vector<std::reference_wrapper<const Tree>> out;
  append_dfs(t, out);
  return out;
}

SyntaxError::SyntaxError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

Tree parse_tree(std::string_view text) {
  detail::Lexer lex(text);
  Tree t = read_tree(lex);
  if (lex.peek().kind != detail::TokenKind::kEnd) lex.fail("expected end of tree");
  return t;
}

std::string to_string(const Tree& t) {
  std::string out;
  write_tree(t, out);
  return out;
}

std::size_t hash_value(const Tree& t) {
  std::size_t h = std::hash<std::string>{}(t.label);
  for (const auto& c : t.children) h = h * 1000003u ^ hash_value(c);
  return h ^ (t.children.size() * 0x9e3779b97f4a7c15ull);
}

}  // namespace rtgae
