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

#include "rtgae/vae.hpp"

namespace rtgae {

BottleneckOut bottleneck(const Model& model, Var code, const Vector& eps) {
  const auto& b = model.bottleneck();
  if (eps.size() != model.config().n_vae)
    throw std::invalid_argument("noise has size " + std::to_string(eps.size()) + ", expected " +
                                std::to_string(model.config().n_vae));
  Tape& tape = *code.tape;
  Var mu = affine(b.U_mu, code, b.a_mu);
  Var sigma = exp(scale(affine(b.U_sigma, code, b.a_sigma), 0.5));
  Var v = mu + mul(tape.constant(eps), sigma);
  Var z = tanh(affine(b.W_rho, v, b.c_rho));
  return BottleneckOut{mu, sigma, z};
}

Vector rho(const Model& model, const Vector& v) {
  const auto& b = model.bottleneck();
  Tape tape(model.params());
  return tanh(affine(b.W_rho, tape.constant(v), b.c_rho)).value();
}

Var kl_term(Var mu, Var sigma, double beta) {
  Var s2 = square(sigma);
  Var ones = mu.tape->constant(Vector::Ones(mu.size()));
  return scale(sum(square(mu) + s2 - log(s2) - ones), beta);
}

LossParts loss(const Model& model, Tape& tape, const Tree& tree, const Vector& eps) {
  Encoding enc = encode(model, tape, tree);
  BottleneckOut bo = bottleneck(model, enc.code, eps);
  Var kl = kl_term(bo.mu, bo.sigma, model.config().beta);
  Var xent = teacher_forced_crossentropy(model, bo.z, Nonterminal(enc.nonterminal), enc.rules);
  return LossParts{kl + xent, xent, kl, enc.rules.size()};
}

Vector sample_noise(const Model& model, Rng& rng) {
  return rng.normal_vector(model.config().n_vae, std::sqrt(model.config().s));
}

LossParts loss(const Model& model, Tape& tape, const Tree& tree, Rng& rng) {
  return loss(model, tape, tree, sample_noise(model, rng));
}

Vector autoencode_latent(const Model& model, const Tree& tree) {
  Tape tape(model.params());
  Encoding enc = encode(model, tape, tree);
  return bottleneck(model, enc.code, Vector::Zero(model.config().n_vae)).z.value();
}

Vector latent_mean(const Model& model, const Tree& tree) {
  Tape tape(model.params());
  Encoding enc = encode(model, tape, tree);
  return bottleneck(model, enc.code, Vector::Zero(model.config().n_vae)).mu.value();
}

}  // namespace rtgae
