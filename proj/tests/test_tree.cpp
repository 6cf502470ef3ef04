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

#include <stack>

#include "doctest.h"
#include "rtgae/tree.hpp"
#include "test_util.hpp"

using namespace rtgae;

namespace {

// Iterative post-order with an explicit stack; independent of dfs_list.
std::vector<std::string> postorder_labels(const Tree& root) {
  std::vector<std::string> out;
  std::stack<std::pair<const Tree*, std::size_t>> st;
  st.push({&root, 0});
  while (!st.empty()) {
    auto& [node, next] = st.top();
    if (next < node->children.size()) {
      const Tree* child = &node->children[next++];
      st.push({child, 0});
    } else {
      out.push_back(node->label);
      st.pop();
    }
  }
  return out;
}

}  // namespace

TEST_CASE("dfs_list of a leaf is the leaf") {
  Tree x("x");
  auto dfs = dfs_list(x);
  REQUIRE(dfs.size() == 1);
  CHECK(&dfs[0].get() == &x);
}

TEST_CASE("dfs_list is post-order") {
  Tree t = parse_tree("and(x, not(y))");
  auto dfs = dfs_list(t);
  std::vector<std::string> got;
  for (const Tree& s : dfs) got.push_back(to_string(s));
  CHECK(got == std::vector<std::string>{"x", "y", "not(y)", "and(x, not(y))"});
  CHECK(size(t) == 4);
  CHECK(dfs.size() == size(t));
}

TEST_CASE("dfs_list agrees with an explicit-stack post-order traversal") {
  for (const auto& t : testing::trees_upto({"a", "b"}, 5)) {
    std::vector<std::string> labels;
    for (const Tree& s : dfs_list(t)) labels.push_back(s.label);
    CHECK(labels == postorder_labels(t));
    CHECK(labels.size() == size(t));
  }
}

TEST_CASE("tree text format") {
  Tree t = parse_tree("  and( x ,not(y))  ");
  CHECK(to_string(t) == "and(x, not(y))");
  CHECK(parse_tree("x()") == Tree("x"));
  CHECK(parse_tree("+(*(3, x), sin(x))").children[0].label == "*");
  CHECK(depth(t) == 3);

  SUBCASE("syntax errors carry positions") {
    try {
      parse_tree("and(x,\n  not(y)");
      FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() == 9);
    }
    CHECK_THROWS_AS(parse_tree("and(x y)"), SyntaxError);
    CHECK_THROWS_AS(parse_tree(""), SyntaxError);
    CHECK_THROWS_AS(parse_tree("x y"), SyntaxError);
  }
}

TEST_CASE("print/parse roundtrip over small trees") {
  for (const auto& t : testing::trees_upto({"and", "x", "+"}, 5)) {
    CHECK(parse_tree(to_string(t)) == t);
  }
}

TEST_CASE("tree ordering and hashing are consistent with equality") {
  Tree a = parse_tree("f(a, b)");
  Tree b = parse_tree("f(a, b)");
  Tree c = parse_tree("f(b)");
  CHECK(a == b);
  CHECK(hash_value(a) == hash_value(b));
  CHECK((a <=> c) != 0);
  CHECK(((a < c) != (c < a)));
}
