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

#include "rtgae/model.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace rtgae {

namespace {

std::string rule_prefix(const char* part, std::size_t r) {
  return std::string(part) + ".r" + std::to_string(r);
}

template <typename T>
T parse_number(const Metadata& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw std::runtime_error("checkpoint is missing metadata '" + key + "'");
  std::istringstream in(it->second);
  T v{};
  if (!(in >> v)) throw std::runtime_error("bad checkpoint metadata " + key + "=" + it->second);
  return v;
}

std::string format_double(double d) {
  std::ostringstream out;
  out.precision(17);
  out << d;
  return out.str();
}

}  // namespace

ListRules ListRules::parse(std::string_view text) {
  if (text == "auto") return {Mode::kAuto, {}};
  if (text == "none" || text.empty()) return {Mode::kNone, {}};
  ListRules lr{Mode::kExplicit, {}};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    auto item = text.substr(pos, end - pos);
    std::size_t r = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), r);
    if (ec != std::errc() || p != item.data() + item.size())
      throw std::invalid_argument("list_rules: expected auto, none or rule indices, got '" +
                                  std::string(text) + "'");
    lr.rules.push_back(r);
    pos = end + 1;
  }
  return lr;
}

std::string ListRules::str() const {
  switch (mode) {
    case Mode::kAuto:
      return "auto";
    case Mode::kNone:
      return "none";
    case Mode::kExplicit:
      break;
  }
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) out += (i ? "," : "") + std::to_string(rules[i]);
  return out;
}

std::vector<std::size_t> list_rule_flags(const RegularTreeGrammar& g) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < g.rules().size(); ++r) {
    const Rule& rule = g.rule(r);
    if (!rule.rhs.empty() && rule.rhs.front() == rule.lhs) out.push_back(r);
  }
  return out;
}

Model::Model(RegularTreeGrammar grammar, ModelConfig config)
    : grammar_(std::move(grammar)), config_(std::move(config)) {
  if (config_.n < 1 || config_.n_vae < 1) throw std::invalid_argument("n and n_VAE must be positive");
  if (config_.max_rules < 1) throw std::invalid_argument("max_rules must be at least 1");
  const auto n = config_.n;
  const auto& rules = grammar_.rules();

  list_mask_.assign(rules.size(), false);
  std::vector<std::size_t> flagged;
  if (config_.list_rules.mode == ListRules::Mode::kAuto) flagged = list_rule_flags(grammar_);
  if (config_.list_rules.mode == ListRules::Mode::kExplicit) flagged = config_.list_rules.rules;
  for (std::size_t r : flagged) {
    if (r >= rules.size() || rules[r].rhs.empty())
      throw std::invalid_argument("list rule " + std::to_string(r) + " does not exist or has no children");
    list_mask_[r] = true;
  }

  Rng rng = Rng(config_.seed).split(0x1417);
  encoder_.resize(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (rules[r].pseudo) continue;
    auto& layer = encoder_[r];
    const std::string p = rule_prefix("enc", r);
    if (rules[r].rhs.empty()) {
      layer.leaf = params_.add(p + ".f", uniform_matrix(n, 1, 1.0, rng));
      continue;
    }
    for (std::size_t j = 0; j < rules[r].rhs.size(); ++j)
      layer.U.push_back(params_.add(p + ".U" + std::to_string(j), fan_in_uniform(n, n, rng)));
    layer.a = params_.add(p + ".a", Matrix::Zero(n, 1));
  }

  for (const auto& nt : grammar_.expandables()) {
    const auto key = *grammar_.expandable_index(nt);
    const auto L = static_cast<Eigen::Index>(grammar_.rules_for(key).size());
    const std::string p = "dec." + nt.str();
    scoring_.push_back(Scoring{params_.add(p + ".V", fan_in_uniform(L, n, rng)),
                               params_.add(p + ".b", Matrix::Zero(L, 1))});
  }

  child_decoders_.resize(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    auto& dec = child_decoders_[r];
    const std::string p = rule_prefix("dec", r);
    for (std::size_t j = 0; j < rules[r].rhs.size(); ++j) {
      if (j == 0 && list_mask_[r]) {
        dec.gru = add_gru(params_, p + ".gru", n, rng);
        dec.embedding = params_.add(p + ".emb", uniform_matrix(n, 1, 1.0, rng));
        dec.W.push_back(ParamId{});
        dec.c.push_back(ParamId{});
        continue;
      }
      dec.W.push_back(params_.add(p + ".W" + std::to_string(j), fan_in_uniform(n, n, rng)));
      dec.c.push_back(params_.add(p + ".c" + std::to_string(j), Matrix::Zero(n, 1)));
    }
  }

  const auto m = config_.n_vae;
  bottleneck_.U_mu = params_.add("vae.U_mu", fan_in_uniform(m, n, rng));
  bottleneck_.a_mu = params_.add("vae.a_mu", Matrix::Zero(m, 1));
  bottleneck_.U_sigma = params_.add("vae.U_sigma", fan_in_uniform(m, n, rng));
  bottleneck_.a_sigma = params_.add("vae.a_sigma", Matrix::Zero(m, 1));
  bottleneck_.W_rho = params_.add("vae.W_rho", fan_in_uniform(n, m, rng));
  bottleneck_.c_rho = params_.add("vae.c_rho", Matrix::Zero(n, 1));
}

void save_model(const std::filesystem::path& path, const Model& model, const Metadata& extra) {
  const auto& c = model.config();
  Metadata meta = extra;
  meta["grammar"] = model.grammar().to_text();
  meta["grammar_hash"] = std::to_string(model.grammar().hash());
  meta["n"] = std::to_string(c.n);
  meta["n_vae"] = std::to_string(c.n_vae);
  meta["beta"] = format_double(c.beta);
  meta["s"] = format_double(c.s);
  meta["max_rules"] = std::to_string(c.max_rules);
  meta["list_rules"] = c.list_rules.str();
  meta["seed"] = std::to_string(c.seed);
  save_checkpoint(path, model.params(), meta);
}

LoadedModel load_model(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  auto git = ck.meta.find("grammar");
  if (git == ck.meta.end()) throw std::runtime_error(path.string() + ": checkpoint has no grammar");
  auto g = RegularTreeGrammar::from_text(git->second);
  if (std::to_string(g.hash()) != ck.meta["grammar_hash"])
    throw std::runtime_error(path.string() + ": grammar hash mismatch");

  ModelConfig c;
  c.n = parse_number<Eigen::Index>(ck.meta, "n");
  c.n_vae = parse_number<Eigen::Index>(ck.meta, "n_vae");
  c.beta = parse_number<double>(ck.meta, "beta");
  c.s = parse_number<double>(ck.meta, "s");
  c.max_rules = parse_number<std::size_t>(ck.meta, "max_rules");
  c.seed = parse_number<std::uint64_t>(ck.meta, "seed");
  c.list_rules = ListRules::parse(ck.meta["list_rules"]);

  LoadedModel out{Model(std::move(g), c), ck.meta};
  auto& store = out.model.params();
  if (store.size() != ck.store.size())
    throw std::runtime_error(path.string() + ": expected " + std::to_string(store.size()) +
                             " parameters, found " + std::to_string(ck.store.size()));
  for (auto& p : store) {
    if (!ck.store.contains(p.name))
      throw std::runtime_error(path.string() + ": missing parameter " + p.name);
    const Matrix& v = ck.store[ck.store.id(p.name)].value;
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols())
      throw std::runtime_error(path.string() + ": wrong shape for " + p.name);
    p.value = v;
  }
  return out;
}

}  // namespace rtgae
