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

#ifndef RTGAE_TRAINING_HPP_
#define RTGAE_TRAINING_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtgae/model.hpp"

namespace rtgae {

/// Multiplies the learning rate by `factor` once the monitored loss has not
/// improved by a relative `threshold` for more than `patience` epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, std::size_t patience, double min_lr,
                   double threshold = 1e-4);

  /// Feeds one epoch's validation loss; returns true if lr was reduced.
  bool step(double loss);
  double lr() const { return lr_; }
  std::size_t bad_epochs() const { return bad_; }

 private:
  double lr_, factor_, min_lr_, threshold_;
  std::size_t patience_;
  double best_;
  std::size_t bad_ = 0;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr_init = 1e-3;
  double lr_min = 1e-4;
  std::size_t patience = 3;
  double factor = 0.5;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> metrics_csv;
  /// Per-epoch progress lines; null for silence.
  std::ostream* log = nullptr;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0, crossentropy = 0, kl = 0, lr = 0, wall_seconds = 0;
};

struct TrainResult {
  Model model;  ///< parameters of the epoch with the lowest validation loss
  std::vector<EpochMetrics> metrics;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetLoss {
  double loss = 0, crossentropy = 0, kl = 0;
};

/// Mean loss over `trees` with noise-free bottleneck.
DatasetLoss evaluate_loss(const Model& model, const std::vector<Tree>& trees);

/// Epoch loop over shuffled mini-batches with Adam on the mean batch loss.
/// The validation loss (without noise) drives the plateau scheduler and the
/// best-model selection; without a validation set the training loss is used.
/// Throws TrainingError on a non-finite loss.
TrainResult train(Model model, const TrainConfig& config, const std::vector<Tree>& train_set,
                  const std::vector<Tree>& valid_set);

struct SearchTrial {
  double beta = 0, s = 0;
  double valid_rmse = 0;
};

struct SearchResult {
  double beta = 0, s = 0;
  std::size_t best_trial = 0;
  std::vector<SearchTrial> trials;
};

/// Random search over (beta, s), each log-uniform in [lo, hi]; every trial
/// trains a fresh model and is scored by validation autoencoding RMSE. Ties
/// keep the lowest trial index.
SearchResult hyper_search(const RegularTreeGrammar& grammar, const ModelConfig& model_config,
                          const TrainConfig& config, const std::vector<Tree>& train_set,
                          const std::vector<Tree>& valid_set, std::size_t trials = 20,
                          double lo = 1e-5, double hi = 1.0);

}  // namespace rtgae

#endif  // RTGAE_TRAINING_HPP_
