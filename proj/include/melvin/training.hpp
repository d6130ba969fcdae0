// Copyright 2026 The melvin-surrogate Authors
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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "melvin/dataset.hpp"
#include "melvin/lstm.hpp"
#include "melvin/srv_loss.hpp"

namespace melvin {

using Model = LstmModel<double>;

struct TrainConfig {
  Task task = Task::kEntanglement;
  double learning_rate = 0.05;
  double momentum = 0.5;
  int batch_size = 128;
  int max_updates = 2000;
  int eval_every = 100;
  int patience = 5;          // non-improving evaluations before stopping
  double lr_decay = 0.5;     // applied on every non-improving evaluation
  double clip_norm = 5.0;    // global gradient-norm clip; <= 0 disables
  int eval_batches = 8;      // fixed balanced validation batches
  std::uint64_t seed = 0;

  /// Throws ConfigurationError.
  void validate() const;
};

struct HistoryRow {
  int update = 0;
  double train_loss = 0.0;  // mean over the updates since the previous row
  double val_loss = 0.0;
};

struct TrainResult {
  Model model;  // best-validation snapshot
  std::vector<HistoryRow> history;
  int best_update = 0;
  bool diverged = false;
};

/// Classical momentum: v <- mu v - lr g, theta <- theta + v.
void sgd_momentum_step(Eigen::VectorXd& params, Eigen::VectorXd& velocity,
                       const Eigen::VectorXd& gradient, double learning_rate, double momentum);

/// Rescales gradient to at most max_norm; returns the norm before clipping.
double clip_gradient(Eigen::VectorXd& gradient, double max_norm);

using BatchStream = std::function<Batch()>;

/// Runs SGD with momentum on batches from the stream, evaluating the mean
/// validation loss every config.eval_every updates. Stops at max_updates or
/// once patience is exhausted. A non-finite training loss ends the run with
/// diverged = true and the best snapshot so far.
TrainResult train(Model model, const BatchStream& stream, std::span<const Batch> validation,
                  const TrainConfig& config);

double mean_loss(const Model& model, std::span<const Batch> batches);

struct Prediction {
  double p_e = 0.5;
  SrvPrediction<double> srv;
};

/// Entanglement probabilities for each record. Throws VocabularyError when the
/// vocabulary differs from the one the model was trained with.
std::vector<double> predict_entanglement(const Model& model, std::span<const Record> records,
                                         const Vocabulary& vocab);
std::vector<SrvPrediction<double>> predict_srv(const Model& model, std::span<const Record> records,
                                               const Vocabulary& vocab);
/// Joint predictions from a separately trained entanglement and SRV model.
std::vector<Prediction> predict_batch(const Model& entanglement, const Model& srv,
                                      std::span<const Record> records, const Vocabulary& vocab);

/// Binary checkpoint: magic, version, shape, vocabulary hash, then the
/// parameter vector as little-endian float64.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);
void write_checkpoint(std::ostream& os, const Model& model);
Model read_checkpoint(std::istream& is);

void write_history_csv(std::ostream& os, std::span<const HistoryRow> history);

}  // namespace melvin
