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

#include "rtgae/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace rtgae {

namespace {

constexpr std::string_view kBooleanText = R"(start S;
S -> and(S, S);
S -> or(S, S);
S -> not(S);
S -> x;
S -> y;
)";

constexpr std::string_view kExpressionsText = R"(start S;
S -> +(S, S);
S -> *(S, S);
S -> /(S, S);
S -> sin(S);
S -> exp(S);
S -> x;
S -> 1;
S -> 2;
S -> 3;
)";

constexpr std::string_view kCnfText = R"(start F;
F -> and(C, F);
F -> or(L, C);
F -> not(A);
F -> x;
F -> y;
C -> or(L, C);
C -> not(A);
C -> x;
C -> y;
L -> not(A);
L -> x;
L -> y;
A -> x;
A -> y;
)";

constexpr std::size_t kBooleanMaxNodes = 14;

Tree negated(Tree t, Rng& rng) {
  if (rng.uniform() < 0.25) {
    t = Tree("not", {std::move(t)});
    if (rng.uniform() < 0.25) t = Tree("not", {std::move(t)});
  }
  return t;
}

Tree boolean_formula(std::size_t binaries, Rng& rng) {
  if (binaries == 0) return negated(Tree(rng.index(2) ? "y" : "x"), rng);
  std::size_t left = rng.index(binaries);
  Tree l = boolean_formula(left, rng);
  Tree r = boolean_formula(binaries - 1 - left, rng);
  return negated(Tree(rng.index(2) ? "or" : "and", {std::move(l), std::move(r)}), rng);
}

Tree atom(Rng& rng) {
  static const char* kAtoms[] = {"x", "1", "2", "3"};
  return Tree(kAtoms[rng.index(4)]);
}

Tree binary_of_atoms(Rng& rng) {
  static const char* kOps[] = {"+", "*", "/"};
  std::string op = kOps[rng.index(3)];
  Tree a = atom(rng);
  Tree b = atom(rng);
  return Tree(op, {std::move(a), std::move(b)});
}

Tree unary(Tree child, Rng& rng) { return Tree(rng.index(2) ? "exp" : "sin", {std::move(child)}); }

}  // namespace

std::vector<std::string> builtin_grammar_ids() { return {"boolean", "expressions", "cnf"}; }

RegularTreeGrammar builtin_grammar(std::string_view id) {
  if (id == "boolean") return RegularTreeGrammar::from_text(kBooleanText);
  if (id == "expressions") return RegularTreeGrammar::from_text(kExpressionsText);
  if (id == "cnf") return RegularTreeGrammar::from_text(kCnfText);
  throw GrammarError("unknown built-in grammar '" + std::string(id) + "'");
}

std::vector<Tree> gen_boolean(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tree> out;
  out.reserve(count);
  while (out.size() < count) {
    std::size_t b = rng.index(4);
    Tree t = boolean_formula(b, rng);
    if (size(t) <= kBooleanMaxNodes) out.push_back(std::move(t));
  }
  return out;
}

std::vector<Tree> gen_expressions(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tree> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Tree first = rng.index(2) ? binary_of_atoms(rng) : atom(rng);
    Tree second = unary(atom(rng), rng);
    Tree third = rng.index(2) ? unary(binary_of_atoms(rng), rng) : unary(atom(rng), rng);
    Tree head("+", {std::move(first), std::move(second)});
    out.emplace_back("+", std::vector<Tree>{std::move(head), std::move(third)});
  }
  return out;
}

std::vector<Tree> Dataset::split(std::size_t index) const {
  std::vector<Tree> out;
  for (std::size_t i = 0; i < trees.size(); ++i)
    if (assignment[i] == index) out.push_back(trees[i]);
  return out;
}

Dataset make_dataset(const DatasetSpec& spec) {
  if (spec.count == 0) throw std::invalid_argument("dataset count must be at least 1");
  double total = std::accumulate(spec.splits.begin(), spec.splits.end(), 0.0);
  if (spec.splits.empty() || std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");

  Dataset data;
  data.spec = spec;
  if (spec.grammar == "boolean") {
    data.trees = gen_boolean(spec.count, spec.seed);
  } else if (spec.grammar == "expressions") {
    data.trees = gen_expressions(spec.count, spec.seed);
  } else {
    auto g = builtin_grammar(spec.grammar);
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < spec.count; ++i)
      data.trees.push_back(sample_tree(g, Nonterminal(g.starts().front()), {}, rng, {14, 10000}));
  }

  // exact split sizes by rounding cumulative fractions, then a seeded shuffle
  std::vector<std::size_t> order(spec.count);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = Rng(spec.seed).split(0x5b1d);
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  data.assignment.assign(spec.count, 0);
  double cum = 0.0;
  std::size_t begin = 0;
  for (std::size_t s = 0; s < spec.splits.size(); ++s) {
    cum += spec.splits[s];
    std::size_t end = s + 1 == spec.splits.size()
                          ? spec.count
                          : static_cast<std::size_t>(std::llround(cum * spec.count));
    for (std::size_t i = begin; i < end; ++i) data.assignment[order[i]] = s;
    begin = end;
  }
  return data;
}

void write_trees(const std::filesystem::path& path, const std::vector<Tree>& trees) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& t : trees) out << to_string(t) << '\n';
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  write_trees(path, data.trees);
  std::ofstream m(path.string() + ".manifest");
  if (!m) throw std::runtime_error("cannot write manifest for " + path.string());
  m << "grammar=" << data.spec.grammar << '\n';
  m << "seed=" << data.spec.seed << '\n';
  m << "count=" << data.trees.size() << '\n';
  m << "splits=";
  for (std::size_t s = 0; s < data.spec.splits.size(); ++s)
    m << (s ? "," : "") << data.spec.splits[s];
  m << '\n';
  for (std::size_t s = 0; s < data.spec.splits.size(); ++s)
    m << "split" << s << "_count="
      << std::count(data.assignment.begin(), data.assignment.end(), s) << '\n';
  m << "assignment=";
  for (auto a : data.assignment) m << a;
  m << '\n';
}

std::vector<Tree> read_trees(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Tree> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      out.push_back(parse_tree(line));
    } catch (const SyntaxError& e) {
      throw SyntaxError(path.string() + ": " + e.what(), lineno, e.column());
    }
  }
  return out;
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset data;
  data.trees = read_trees(path);
  data.spec.count = data.trees.size();
  data.spec.splits = {1.0};
  data.assignment.assign(data.trees.size(), 0);
  const auto manifest = path.string() + ".manifest";
  std::ifstream in(manifest);
  if (!in) return data;
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto bad = [&](const std::string& why) {
    return std::runtime_error(manifest + ": " + why);
  };
  if (kv.count("grammar")) data.spec.grammar = kv["grammar"];
  if (kv.count("seed")) data.spec.seed = std::stoull(kv["seed"]);
  if (kv.count("splits")) {
    data.spec.splits.clear();
    std::istringstream ss(kv["splits"]);
    for (std::string f; std::getline(ss, f, ',');) data.spec.splits.push_back(std::stod(f));
  }
  const std::string& a = kv["assignment"];
  if (a.size() != data.trees.size())
    throw bad("assignment has " + std::to_string(a.size()) + " entries for " +
              std::to_string(data.trees.size()) + " trees");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < '0' || static_cast<std::size_t>(a[i] - '0') >= data.spec.splits.size())
      throw bad("bad split index at position " + std::to_string(i));
    data.assignment[i] = static_cast<std::size_t>(a[i] - '0');
  }
  return data;
}

}  // namespace rtgae
