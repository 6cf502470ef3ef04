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

// The autoencoder's parameters, grouped by the layer that owns them.
//
// Parameter names are stable and used as checkpoint keys:
//   enc.r<r>.f            leaf constant of nullary rule r
//   enc.r<r>.U<j>, .a     encoder layer of rule r
//   dec.<A>.V, .b         rule scoring layer of expandable nonterminal A
//   dec.r<r>.W<j>, .c<j>  feedforward child decoder of slot j
//   dec.r<r>.gru.*, .emb  recurrent decoder of slot 0 of a list rule
//   vae.U_mu, vae.a_mu, vae.U_sigma, vae.a_sigma, vae.W_rho, vae.c_rho

#ifndef RTGAE_MODEL_HPP_
#define RTGAE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rtgae/diff.hpp"
#include "rtgae/grammar.hpp"

namespace rtgae {

/// Which rules decode their first child with a GRU cell.
struct ListRules {
  enum class Mode { kAuto, kNone, kExplicit };
  Mode mode = Mode::kAuto;
  std::vector<std::size_t> rules;  ///< kExplicit only

  /// "auto", "none", or a comma-separated list of rule indices.
  static ListRules parse(std::string_view text);
  std::string str() const;
};

/// Rules whose left-hand side is also their first right-hand-side slot.
std::vector<std::size_t> list_rule_flags(const RegularTreeGrammar& g);

struct ModelConfig {
  Eigen::Index n = 100;
  Eigen::Index n_vae = 8;
  double beta = 1e-3;  ///< KL weight
  double s = 1e-3;     ///< noise variance
  std::size_t max_rules = 100;
  ListRules list_rules{ListRules::Mode::kNone, {}};
  std::uint64_t seed = 0;
};

class Model {
 public:
  /// Registers and initializes every parameter from config.seed.
  Model(RegularTreeGrammar grammar, ModelConfig config);

  const RegularTreeGrammar& grammar() const { return grammar_; }
  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  Nonterminal start() const { return Nonterminal(grammar_.starts().front()); }

  struct EncoderLayer {
    std::optional<ParamId> leaf;  ///< nullary rules
    std::vector<ParamId> U;
    std::optional<ParamId> a;
  };
  struct ChildDecoder {
    std::vector<ParamId> W, c;  ///< per slot; slot 0 unused when gru is set
    std::optional<GruParams> gru;
    std::optional<ParamId> embedding;
  };
  struct Scoring {
    ParamId V, b;
  };
  struct Bottleneck {
    ParamId U_mu, a_mu, U_sigma, a_sigma, W_rho, c_rho;
  };

  /// Indexed by rule; empty for pseudo-rules.
  const std::vector<EncoderLayer>& encoder() const { return encoder_; }
  /// Indexed by rule, including pseudo-rules.
  const std::vector<ChildDecoder>& child_decoders() const { return child_decoders_; }
  /// Indexed by expandable nonterminal key.
  const std::vector<Scoring>& scoring() const { return scoring_; }
  const Bottleneck& bottleneck() const { return bottleneck_; }
  const std::vector<bool>& list_rule_mask() const { return list_mask_; }

 private:
  RegularTreeGrammar grammar_;
  ModelConfig config_;
  ParamStore params_;
  std::vector<EncoderLayer> encoder_;
  std::vector<ChildDecoder> child_decoders_;
  std::vector<Scoring> scoring_;
  Bottleneck bottleneck_{};
  std::vector<bool> list_mask_;
};

/// Extra key=value pairs (for example training statistics) may be stored
/// alongside the model metadata.
void save_model(const std::filesystem::path& path, const Model& model, const Metadata& extra = {});

struct LoadedModel {
  Model model;
  Metadata meta;
};

/// Rebuilds the model from the embedded grammar and configuration and
/// checks that every parameter is present with the expected shape.
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace rtgae

#endif  // RTGAE_MODEL_HPP_
