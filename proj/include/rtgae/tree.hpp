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

#ifndef RTGAE_TREE_HPP_
#define RTGAE_TREE_HPP_

#include <compare>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rtgae {

/// Labeled ordered tree x(y_1, ..., y_k). A leaf has no children.
struct Tree {
  std::string label;
  std::vector<Tree> children;

  Tree() = default;
  explicit Tree(std::string l) : label(std::move(l)) {}
  Tree(std::string l, std::vector<Tree> c)
      : label(std::move(l)), children(std::move(c)) {}

  bool is_leaf() const { return children.empty(); }

  friend bool operator==(const Tree&, const Tree&) = default;
  friend std::strong_ordering operator<=>(const Tree& a, const Tree& b);
};

/// Number of nodes; equals the length of the DFS list.
std::size_t size(const Tree& t);
std::size_t depth(const Tree& t);

/// Post-order list of all subtrees: children's lists in order, then the node.
std::vector<std::reference_wrapper<const Tree>> dfs_list(const Tree& t);

/// Error in the textual tree or grammar formats, with 1-based position.
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Reads `and(x, not(y))`. A bare symbol (or `x()`) is a leaf.
Tree parse_tree(std::string_view text);

/// Writes the same format parse_tree reads; leaves print without parentheses.
std::string to_string(const Tree& t);

std::size_t hash_value(const Tree& t);

struct TreeHash {
  std::size_t operator()(const Tree& t) const { return hash_value(t); }
};

}  // namespace rtgae

#endif  // RTGAE_TREE_HPP_
