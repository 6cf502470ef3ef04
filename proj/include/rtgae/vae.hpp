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

#ifndef RTGAE_VAE_HPP_
#define RTGAE_VAE_HPP_

#include "rtgae/decoder.hpp"
#include "rtgae/encoder.hpp"

namespace rtgae {

struct BottleneckOut {
  Var mu;
  Var sigma;
  Var z;
};

/// mu = U^mu x + a^mu, sigma = exp((U^sigma x + a^sigma) / 2),
/// z = tanh(W^rho (mu + eps * sigma) + c^rho).
BottleneckOut bottleneck(const Model& model, Var code, const Vector& eps);

/// rho(v) = tanh(W^rho v + c^rho), for decoding latent samples.
Vector rho(const Model& model, const Vector& v);

/// beta * sum_j (mu_j^2 + sigma_j^2 - log sigma_j^2 - 1).
Var kl_term(Var mu, Var sigma, double beta);

template <typename D1, typename D2>
double kl_divergence(const Eigen::MatrixBase<D1>& mu, const Eigen::MatrixBase<D2>& sigma,
                     double beta) {
  auto s2 = sigma.array().square();
  return beta * (mu.array().square() + s2 - s2.log() - 1.0).sum();
}

struct LossParts {
  Var total;
  Var crossentropy;
  Var kl;
  std::size_t steps = 0;  ///< decoder steps, equal to the rule sequence length
};

/// Encode, bottleneck with the given noise, KL plus teacher-forced
/// crossentropy of the gold rule sequence.
LossParts loss(const Model& model, Tape& tape, const Tree& tree, const Vector& eps);
/// Draws eps ~ N(0, s I) once.
LossParts loss(const Model& model, Tape& tape, const Tree& tree, Rng& rng);

Vector sample_noise(const Model& model, Rng& rng);

/// Noise-free latent code z = rho(mu(encode(tree))).
Vector autoencode_latent(const Model& model, const Tree& tree);

/// mu(encode(tree)); decoding rho of it reproduces autoencode_latent.
Vector latent_mean(const Model& model, const Tree& tree);

}  // namespace rtgae

#endif  // RTGAE_VAE_HPP_
