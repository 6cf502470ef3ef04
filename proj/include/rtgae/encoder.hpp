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

#ifndef RTGAE_ENCODER_HPP_
#define RTGAE_ENCODER_HPP_

#include "rtgae/model.hpp"

namespace rtgae {

struct Encoding {
  std::string nonterminal;
  RuleSequence rules;
  Var code;
};

/// Parses `tree` and computes its code bottom-up on `tape`:
///   nullary rule r        -> f^r
///   rule r with k slots   -> tanh(sum_j U^{r,j} y_j + a^r)
///   B? -> e, B* -> e      -> 0
///   B? -> B               -> y_1
///   B* -> B,B*            -> y_1 + y_2
/// Throws ParseError when the tree is not in the grammar's language.
Encoding encode(const Model& model, Tape& tape, const Tree& tree);

/// Code of `tree` without recording gradients.
Vector encode_vector(const Model& model, const Tree& tree);

}  // namespace rtgae

#endif  // RTGAE_ENCODER_HPP_
