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

#include "rtgae/encoder.hpp"

namespace rtgae {

Encoding encode(const Model& model, Tape& tape, const Tree& tree) {
  ParseResult parsed = parse(model.grammar(), tree);
  const auto& g = model.grammar();

  // The rule sequence is a pre-order listing, so a reverse sweep sees every
  // subtree before its parent; the first child ends up on top.
  std::vector<Var> stack;
  for (auto it = parsed.rules.rbegin(); it != parsed.rules.rend(); ++it) {
    const std::size_t r = *it;
    const Rule& rule = g.rule(r);
    const std::size_t k = rule.rhs.size();
    std::vector<Var> children(k);
    for (std::size_t j = 0; j < k; ++j) {
      children[j] = stack.back();
      stack.pop_back();
    }

    Var code;
    if (rule.pseudo) {
      if (k == 0) {
        code = tape.zeros(model.config().n);
      } else if (k == 1) {
        code = children[0];
      } else {
        code = children[0] + children[1];
      }
    } else if (k == 0) {
      code = tape.param(*model.encoder()[r].leaf);
    } else {
      const auto& layer = model.encoder()[r];
      Var acc = affine(layer.U[0], children[0], *layer.a);
      for (std::size_t j = 1; j < k; ++j) acc = acc + matvec(layer.U[j], children[j]);
      code = tanh(acc);
    }
    stack.push_back(code);
  }
  return Encoding{std::move(parsed.nonterminal), std::move(parsed.rules), stack.back()};
}

Vector encode_vector(const Model& model, const Tree& tree) {
  Tape tape(model.params());
  return encode(model, tape, tree).code.value();
}

}  // namespace rtgae
