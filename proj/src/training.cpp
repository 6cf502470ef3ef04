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

#include "rtgae/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "rtgae/eval.hpp"
#include "rtgae/vae.hpp"

namespace rtgae {

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience, double min_lr,
                                   double threshold)
    : lr_(lr),
      factor_(factor),
      min_lr_(min_lr),
      threshold_(threshold),
      patience_(patience),
      best_(std::numeric_limits<double>::infinity()) {
  if (min_lr > lr) throw std::invalid_argument("lr_min must not exceed the initial learning rate");
  if (!(factor > 0 && factor < 1)) throw std::invalid_argument("decay factor must be in (0, 1)");
}

bool PlateauScheduler::step(double loss) {
  if (loss < best_ * (1.0 - threshold_)) {
    best_ = loss;
    bad_ = 0;
    return false;
  }
  if (++bad_ <= patience_) return false;
  bad_ = 0;
  const double next = std::max(lr_ * factor_, min_lr_);
  const bool reduced = next < lr_;
  lr_ = next;
  return reduced;
}

DatasetLoss evaluate_loss(const Model& model, const std::vector<Tree>& trees) {
  DatasetLoss out;
  if (trees.empty()) return out;
  const Vector zero = Vector::Zero(model.config().n_vae);
  for (const auto& t : trees) {
    Tape tape(model.params());
    LossParts lp = loss(model, tape, t, zero);
    out.loss += scalar(lp.total);
    out.crossentropy += scalar(lp.crossentropy);
    out.kl += scalar(lp.kl);
  }
  const double n = static_cast<double>(trees.size());
  out.loss /= n;
  out.crossentropy /= n;
  out.kl /= n;
  return out;
}

namespace {

void write_metrics_header(std::ofstream& out) {
  out << "epoch,split,loss,crossentropy,kl,lr,wall_seconds\n";
}

void write_metrics_row(std::ofstream& out, const EpochMetrics& m) {
  out.precision(10);
  out << m.epoch << ',' << m.split << ',' << m.loss << ',' << m.crossentropy << ',' << m.kl << ','
      << m.lr << ',' << m.wall_seconds << '\n';
  out.flush();
}

[[noreturn]] void non_finite(std::size_t epoch, std::size_t batch, const std::vector<Tree>& trees,
                             const std::vector<std::size_t>& members) {
  std::ostringstream msg;
  msg << "non-finite loss in epoch " << epoch << ", batch " << batch << "; trees:";
  for (auto i : members) msg << "\n  [" << i << "] " << to_string(trees[i]);
  throw TrainingError(msg.str());
}

}  // namespace

TrainResult train(Model model, const TrainConfig& cfg, const std::vector<Tree>& train_set,
                  const std::vector<Tree>& valid_set) {
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  for (const auto& t : train_set) parse(model.grammar(), t);
  for (const auto& t : valid_set) parse(model.grammar(), t);

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  std::optional<std::ofstream> csv;
  if (cfg.metrics_csv) {
    csv.emplace(*cfg.metrics_csv);
    if (!*csv) throw std::runtime_error("cannot write " + cfg.metrics_csv->string());
    write_metrics_header(*csv);
  }

  PlateauScheduler sched(cfg.lr_init, cfg.factor, cfg.patience, cfg.lr_min);
  Rng shuffle_rng = Rng(cfg.seed).split(1);
  Rng noise_rng = Rng(cfg.seed).split(2);
  model.params().zero_grad();

  TrainResult result{model, {}, 0, std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = sched.lr();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochMetrics tm{epoch, "train", 0, 0, 0, lr, 0};
    std::size_t batch = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      const double weight = 1.0 / static_cast<double>(end - begin);
      std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
      for (std::size_t i : members) {
        Tape tape(model.params());
        LossParts lp = loss(model, tape, train_set[i], noise_rng);
        const double l = scalar(lp.total);
        if (!std::isfinite(l)) non_finite(epoch, batch, train_set, members);
        tape.backward(lp.total, model.params(), weight);
        tm.loss += l;
        tm.crossentropy += scalar(lp.crossentropy);
        tm.kl += scalar(lp.kl);
      }
      adam_step(model.params(), AdamConfig{.lr = lr});
    }
    const double n = std::max<double>(1.0, static_cast<double>(train_set.size()));
    tm.loss /= n;
    tm.crossentropy /= n;
    tm.kl /= n;
    tm.wall_seconds = elapsed();
    result.metrics.push_back(tm);
    if (csv) write_metrics_row(*csv, tm);

    double monitored = tm.loss;
    if (!valid_set.empty()) {
      DatasetLoss v = evaluate_loss(model, valid_set);
      EpochMetrics vm{epoch, "valid", v.loss, v.crossentropy, v.kl, lr, elapsed()};
      result.metrics.push_back(vm);
      if (csv) write_metrics_row(*csv, vm);
      monitored = v.loss;
    }
    if (!std::isfinite(monitored)) throw TrainingError("non-finite validation loss in epoch " + std::to_string(epoch));

    if (monitored < result.best_valid_loss) {
      result.best_valid_loss = monitored;
      result.best_epoch = epoch;
      result.model = model;
      if (cfg.checkpoint)
        save_model(*cfg.checkpoint, model,
                   {{"epoch", std::to_string(epoch)}, {"train_seed", std::to_string(cfg.seed)}});
    }
    if (cfg.log)
      *cfg.log << "epoch " << epoch << " train_loss " << tm.loss << " valid_loss " << monitored
               << " lr " << lr << " time " << tm.wall_seconds << "s\n";
    sched.step(monitored);
  }
  if (cfg.epochs == 0 && cfg.checkpoint) save_model(*cfg.checkpoint, result.model);
  return result;
}

SearchResult hyper_search(const RegularTreeGrammar& grammar, const ModelConfig& model_config,
                          const TrainConfig& config, const std::vector<Tree>& train_set,
                          const std::vector<Tree>& valid_set, std::size_t trials, double lo,
                          double hi) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (!(lo > 0 && lo <= hi)) throw std::invalid_argument("search range must satisfy 0 < lo <= hi");
  Rng rng = Rng(config.seed).split(3);
  auto log_uniform = [&] {
    return std::min(hi, std::max(lo, std::exp(rng.uniform(std::log(lo), std::log(hi)))));
  };
  SearchResult res;
  for (std::size_t t = 0; t < trials; ++t) {
    SearchTrial trial;
    trial.beta = log_uniform();
    trial.s = log_uniform();
    ModelConfig mc = model_config;
    mc.beta = trial.beta;
    mc.s = trial.s;
    TrainConfig tc = config;
    tc.checkpoint.reset();
    tc.metrics_csv.reset();
    TrainResult tr = train(Model(grammar, mc), tc, train_set, valid_set);
    trial.valid_rmse = autoencoding_rmse(tr.model, valid_set).rmse;
    if (config.log)
      *config.log << "trial " << t << " beta " << trial.beta << " s " << trial.s << " valid_rmse "
                  << trial.valid_rmse << "\n";
    res.trials.push_back(trial);
    if (t == 0 || trial.valid_rmse < res.trials[res.best_trial].valid_rmse) res.best_trial = t;
  }
  res.beta = res.trials[res.best_trial].beta;
  res.s = res.trials[res.best_trial].s;
  return res;
}

}  // namespace rtgae
