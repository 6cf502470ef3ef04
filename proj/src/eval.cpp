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

#include "rtgae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rtgae/parallel.hpp"
#include "rtgae/vae.hpp"

namespace rtgae {

namespace {

// Post-order labels and leftmost-leaf indices, 1-based.
struct Indexed {
  std::vector<const std::string*> label{nullptr};
  std::vector<std::size_t> leftmost{0};
  std::vector<std::size_t> keyroots;

  explicit Indexed(const Tree& t) {
    visit(t);
    const std::size_t n = label.size() - 1;
    std::vector<bool> seen(n + 1, false);
    for (std::size_t i = n; i >= 1; --i) {
      if (!seen[leftmost[i]]) {
        keyroots.push_back(i);
        seen[leftmost[i]] = true;
      }
    }
    std::reverse(keyroots.begin(), keyroots.end());
  }

  std::size_t visit(const Tree& t) {
    std::size_t first = 0;
    for (const auto& c : t.children) {
      std::size_t l = visit(c);
      if (first == 0) first = l;
    }
    label.push_back(&t.label);
    std::size_t self = label.size() - 1;
    leftmost.push_back(first == 0 ? self : first);
    return leftmost.back();
  }
};

}  // namespace

std::size_t tree_edit_distance(const Tree& a, const Tree& b) {
  const Indexed A(a), B(b);
  const std::size_t na = A.label.size() - 1, nb = B.label.size() - 1;
  std::vector<std::vector<std::size_t>> td(na + 1, std::vector<std::size_t>(nb + 1, 0));
  std::vector<std::vector<std::size_t>> fd;

  for (std::size_t i : A.keyroots) {
    for (std::size_t j : B.keyroots) {
      const std::size_t li = A.leftmost[i], lj = B.leftmost[j];
      const std::size_t m = i - li + 2, n = j - lj + 2;
      fd.assign(m, std::vector<std::size_t>(n, 0));
      const std::size_t ioff = li - 1, joff = lj - 1;
      for (std::size_t x = 1; x < m; ++x) fd[x][0] = fd[x - 1][0] + 1;
      for (std::size_t y = 1; y < n; ++y) fd[0][y] = fd[0][y - 1] + 1;
      for (std::size_t x = 1; x < m; ++x) {
        for (std::size_t y = 1; y < n; ++y) {
          const std::size_t i1 = x + ioff, j1 = y + joff;
          const std::size_t del = fd[x - 1][y] + 1, ins = fd[x][y - 1] + 1;
          if (A.leftmost[i1] == li && B.leftmost[j1] == lj) {
            const std::size_t rel = fd[x - 1][y - 1] + (*A.label[i1] == *B.label[j1] ? 0 : 1);
            fd[x][y] = std::min({del, ins, rel});
            td[i1][j1] = fd[x][y];
          } else {
            const std::size_t p = A.leftmost[i1] - 1 - ioff, q = B.leftmost[j1] - 1 - joff;
            fd[x][y] = std::min({del, ins, fd[p][q] + td[i1][j1]});
          }
        }
      }
    }
  }
  return td[na][nb];
}

EvalReport autoencoding_rmse(const Model& model, const std::vector<Tree>& trees,
                             std::size_t threads) {
  EvalReport rep;
  const std::size_t n = trees.size();
  rep.samples = n;
  rep.distances.assign(n, 0.0);
  rep.outputs.assign(n, Tree());
  rep.budget_failed.assign(n, false);
  parallel_for(n, threads, [&](std::size_t i) {
    Vector z = autoencode_latent(model, trees[i]);
    const Nonterminal start(parse(model.grammar(), trees[i]).nonterminal);
    Tree out;
    try {
      out = decode(model, z, start, DecodeMode::kGreedy).tree;
    } catch (const DecodeBudgetError& e) {
      out = complete_partial(model, start, e);
      rep.budget_failed[i] = true;
    }
    rep.distances[i] = static_cast<double>(tree_edit_distance(trees[i], out));
    rep.outputs[i] = std::move(out);
  });
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sq += rep.distances[i] * rep.distances[i];
    if (rep.budget_failed[i]) ++rep.budget_failures;
  }
  rep.rmse = n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  return rep;
}

EvalReport syntactic_correctness_rate(const Model& model, std::size_t m, const Rng& rng,
                                      std::size_t threads) {
  EvalReport rep;
  rep.samples = m;
  rep.outputs.assign(m, Tree());
  rep.budget_failed.assign(m, false);
  std::vector<char> parse_failed(m, 0);
  parallel_for(m, threads, [&](std::size_t i) {
    Rng local = rng.split(i);
    Vector z = rho(model, local.normal_vector(model.config().n_vae));
    try {
      Tree t = decode(model, z, model.start(), DecodeMode::kSample, &local).tree;
      try {
        if (!model.grammar().is_start(parse(model.grammar(), t).nonterminal)) parse_failed[i] = 1;
      } catch (const ParseError&) {
        parse_failed[i] = 1;
      }
      rep.outputs[i] = std::move(t);
    } catch (const DecodeBudgetError&) {
      rep.budget_failed[i] = true;
    }
  });
  for (std::size_t i = 0; i < m; ++i) {
    rep.budget_failures += rep.budget_failed[i];
    rep.parse_failures += parse_failed[i];
  }
  rep.correctness_rate =
      m ? static_cast<double>(m - rep.budget_failures - rep.parse_failures) / static_cast<double>(m)
        : 0.0;
  return rep;
}

std::string summary(const EvalReport& r) {
  std::ostringstream out;
  out << "samples=" << r.samples;
  if (r.distances.empty())
    out << " correctness_rate=" << r.correctness_rate << " parse_failures=" << r.parse_failures;
  else
    out << " rmse=" << r.rmse;
  out << " budget_failures=" << r.budget_failures;
  return out.str();
}

void write_eval_csv(const std::filesystem::path& path, const EvalReport& report,
                    const std::vector<Tree>& inputs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto quote = [](const std::string& s) { return "\"" + s + "\""; };
  out << "index,distance,budget_failed,input,output\n";
  for (std::size_t i = 0; i < report.outputs.size(); ++i) {
    out << i << ',' << (i < report.distances.size() ? report.distances[i] : 0.0) << ','
        << (report.budget_failed[i] ? 1 : 0) << ','
        << quote(i < inputs.size() ? to_string(inputs[i]) : "") << ','
        << quote(to_string(report.outputs[i])) << '\n';
  }
  out << "# " << summary(report) << '\n';
}

}  // namespace rtgae
