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

#include "melvin/pipeline.hpp"

#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "melvin/errors.hpp"

namespace melvin {

TrainResult train_task(std::span<const Record> records, const Vocabulary& vocab, int embed, int hidden,
                       const TrainConfig& config, double val_fraction) {
  config.validate();
  std::vector<Record> train_part;
  std::vector<Record> val_part;
  Rng split_rng(derive_seed(config.seed, "validation"));
  for (const auto& r : records) {
    if (config.task == Task::kSrv && !r.srv) continue;
    (split_rng.bernoulli(val_fraction) ? val_part : train_part).push_back(r);
  }
  if (train_part.empty()) throw ConfigurationError("no training records for " + to_string(config.task));

  std::vector<Batch> validation;
  if (!val_part.empty()) {
    try {
      BalancedSampler val_sampler(val_part, config.task, config.batch_size, derive_seed(config.seed, "val-batches"));
      for (int i = 0; i < config.eval_batches; ++i) {
        validation.push_back(make_batch(val_part, val_sampler.next(), vocab));
      }
    } catch (const ConfigurationError&) {
      validation = {make_batch(val_part, vocab)};  // a class is missing; fall back to the raw subset
    }
  }

  auto sampler = std::make_shared<BalancedSampler>(train_part, config.task, config.batch_size,
                                                   derive_seed(config.seed, "batches"));
  const BatchStream stream = [&, sampler]() { return make_batch(train_part, sampler->next(), vocab); };

  ModelShape shape{vocab.size(), embed, hidden, config.task, vocab.hash()};
  return train(Model::initialized(shape, derive_seed(config.seed, "init")), stream, validation, config);
}

ModelPair train_pair(std::span<const Record> records, const Vocabulary& vocab, const PipelineConfig& config) {
  TrainConfig ent = config.entanglement;
  TrainConfig srv = config.srv;
  ent.task = Task::kEntanglement;
  srv.task = Task::kSrv;
  ent.seed = derive_seed(config.seed, "ent");
  srv.seed = derive_seed(config.seed, "srv");
  return {train_task(records, vocab, config.embed, config.hidden, ent, config.val_fraction),
          train_task(records, vocab, config.embed, config.hidden, srv, config.val_fraction)};
}

FoldPartition ccv_partition(std::span<const Record> records, int fold) {
  FoldPartition out;
  for (const auto& r : records) {
    if (r.split != Split::kTrain) continue;
    if (!r.fold) throw StructuralError("train record without a fold; run assign_folds first");
    (*r.fold == fold ? out.held_out : out.train).push_back(r);
  }
  return out;
}

std::vector<FoldReport> ccv_run(std::span<const Record> records, const Vocabulary& vocab,
                                const PipelineConfig& config, const InterestCriterion& criterion,
                                std::span<const int> folds) {
  std::vector<FoldReport> reports;
  for (int f : folds) {
    FoldPartition part = ccv_partition(records, f);
    if (part.held_out.empty()) throw ConfigurationError("fold " + std::to_string(f) + " has no records");
    for (const auto& r : part.train) {
      if (*r.fold == f) throw StructuralError("held-out fold leaked into training");
    }
    PipelineConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, "ccv-fold", static_cast<std::uint64_t>(f));
    const ModelPair models = train_pair(part.train, vocab, fold_config);
    const auto preds = predict_batch(models.entanglement.model, models.srv.model, part.held_out, vocab);
    reports.push_back({std::to_string(f), static_cast<long>(part.held_out.size()),
                       confusion(part.held_out, preds, criterion)});
  }

  std::vector<Record> train_all;
  std::vector<Record> extrapolation;
  for (const auto& r : records) {
    if (r.split == Split::kTrain) train_all.push_back(r);
    if (r.split == Split::kExtrapolation) extrapolation.push_back(r);
  }
  if (!extrapolation.empty()) {
    PipelineConfig all_config = config;
    all_config.seed = derive_seed(config.seed, "ccv-all");
    const ModelPair models = train_pair(train_all, vocab, all_config);
    const auto preds = predict_batch(models.entanglement.model, models.srv.model, extrapolation, vocab);
    reports.push_back({"extrapolation", static_cast<long>(extrapolation.size()),
                       confusion(extrapolation, preds, criterion)});
  }
  return reports;
}

void write_summary(std::ostream& os, std::span<const FoldReport> reports) {
  const auto cell = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) {
      s << std::fixed << std::setprecision(4) << *v;
    } else {
      s << "-";
    }
    return s.str();
  };
  os << std::left << std::setw(15) << "fold" << std::setw(10) << "records" << std::setw(10) << "TNR"
     << std::setw(10) << "TPR" << std::setw(10) << "PPV" << "rediscovery\n";
  const auto row = [&](const std::string& name, long n, const MetricsReport& m) {
    os << std::left << std::setw(15) << name << std::setw(10) << n << std::setw(10) << cell(m.tnr.value)
       << std::setw(10) << cell(m.tpr.value) << std::setw(10) << cell(m.ppv.value)
       << cell(m.rediscovery_ratio) << '\n';
  };
  const FoldReport* f0 = nullptr;
  const FoldReport* f1 = nullptr;
  for (const auto& r : reports) {
    row(r.name, r.records, r.metrics);
    if (r.name == "0") f0 = &r;
    if (r.name == "1") f1 = &r;
  }
  if (f0 && f1) {
    // Counts add up across the two halves; the rediscovery ratio does not, so
    // it is omitted for the merged row.
    MetricsReport m;
    m.tp = f0->metrics.tp + f1->metrics.tp;
    m.tn = f0->metrics.tn + f1->metrics.tn;
    m.fp = f0->metrics.fp + f1->metrics.fp;
    m.fn = f0->metrics.fn + f1->metrics.fn;
    m.tpr = wilson_rate(m.tp, m.tp + m.fn);
    m.tnr = wilson_rate(m.tn, m.tn + m.fp);
    m.ppv = wilson_rate(m.tp, m.tp + m.fp);
    row("0,1 (merged)", f0->records + f1->records, m);
  }
}

}  // namespace melvin
