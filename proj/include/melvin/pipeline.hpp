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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "melvin/dataset.hpp"
#include "melvin/metrics.hpp"
#include "melvin/training.hpp"

namespace melvin {

struct PipelineConfig {
  int embed = 64;
  int hidden = 128;
  TrainConfig entanglement{.task = Task::kEntanglement};
  TrainConfig srv{.task = Task::kSrv};
  double val_fraction = 0.1;  // share of the training records held out for early stopping
  std::uint64_t seed = 0;
};

/// Trains one task network on the given records. The SRV task only uses
/// records carrying an SRV. A validation subset is carved out with
/// val_fraction and sampled into fixed balanced batches.
TrainResult train_task(std::span<const Record> records, const Vocabulary& vocab, int embed, int hidden,
                       const TrainConfig& config, double val_fraction);

struct ModelPair {
  TrainResult entanglement;
  TrainResult srv;
};

/// Two independent networks, one per task; they share no parameters.
ModelPair train_pair(std::span<const Record> records, const Vocabulary& vocab, const PipelineConfig& config);

struct FoldReport {
  std::string name;  // "0".."8" or "extrapolation"
  long records = 0;
  MetricsReport metrics;
};

struct FoldPartition {
  std::vector<Record> train;
  std::vector<Record> held_out;
};

/// Train-split records outside fold f versus those inside it.
FoldPartition ccv_partition(std::span<const Record> records, int fold);

/// Cluster cross validation: for every fold a fresh model pair is trained on
/// the other folds and evaluated on the held-out one; the extrapolation set is
/// evaluated with a pair trained on all folds. Throws ConfigurationError for a
/// fold without records.
std::vector<FoldReport> ccv_run(std::span<const Record> records, const Vocabulary& vocab,
                                const PipelineConfig& config, const InterestCriterion& criterion,
                                std::span<const int> folds);

/// Plain-text table of TNR/TPR/rediscovery per fold, plus a merged 0,1 row
/// when both halves are present.
void write_summary(std::ostream& os, std::span<const FoldReport> reports);

}  // namespace melvin
