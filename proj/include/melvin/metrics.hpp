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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "melvin/dataset.hpp"
#include "melvin/labeler.hpp"
#include "melvin/training.hpp"

namespace melvin {

enum class MatchMode {
  kTrueLabel,  // prediction within r of the sample's own SRV
  kTargetSet,  // prediction within r of any positive SRV in the evaluated set
};

std::string to_string(MatchMode mode);
MatchMode parse_match_mode(std::string_view s);

struct InterestCriterion {
  double tau = 0.5;
  double radius = 3.0;
  MatchMode mode = MatchMode::kTrueLabel;
};

/// Proportion with a 95% Wilson score interval; empty when the denominator is 0.
struct Rate {
  std::optional<double> value;
  std::optional<double> low;
  std::optional<double> high;
};

Rate wilson_rate(long successes, long trials, double z = 1.959963984540054);

struct MetricsReport {
  long tp = 0, tn = 0, fp = 0, fn = 0;
  Rate tpr, tnr, ppv;
  std::optional<double> rediscovery_ratio;
  long missing_srv = 0;  // records needing an SRV for matching but lacking one
};

/// The SRVs a prediction may match in target-set mode: distinct SRVs of the
/// positive records.
std::vector<SrvLabel> target_set(std::span<const Record> records);

/// p_e > tau and some y in the match set has ||y - srv_pred||_2 < radius.
bool classify_interesting(double p_e, const SrvPrediction<double>& srv_pred,
                          const std::optional<SrvLabel>& true_srv, const InterestCriterion& criterion,
                          std::span<const SrvLabel> targets = {});

/// One interesting/uninteresting flag per record.
using Flags = std::vector<std::uint8_t>;

Flags classify_all(std::span<const Record> records, std::span<const Prediction> predictions,
                               const InterestCriterion& criterion, long* missing_srv = nullptr);

/// Fraction of distinct positive SRVs with at least 20% of their samples
/// classified interesting. Empty when there are no positives.
std::optional<double> rediscovery_ratio(std::span<const Record> records,
                                        std::span<const std::uint8_t> interesting);
std::optional<double> rediscovery_ratio(std::span<const Record> records,
                                        std::span<const Prediction> predictions,
                                        const InterestCriterion& criterion);

MetricsReport confusion(std::span<const Record> records, std::span<const std::uint8_t> interesting);
MetricsReport confusion(std::span<const Record> records, std::span<const Prediction> predictions,
                        const InterestCriterion& criterion);

/// 1.00, 0.99, ..., 0.00 (101 points).
std::vector<double> default_tau_grid();
/// 0.5, 0.6, ..., 7.0 (66 points).
std::vector<double> default_radius_grid();

struct SweepRow {
  double tau = 0.0;
  double radius = 0.0;
  MetricsReport metrics;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // radius-major, tau in grid order
  std::vector<std::optional<double>> average_precision;  // one per radius
  std::optional<double> mean_average_precision;
};

/// Metrics over the (tau, radius) grid from cached predictions. For each
/// radius the average precision is sum_i (R_i - R_{i-1}) P_i with tau walked in
/// grid order (descending) and R_0 = 0; mAP is the mean over radii.
SweepResult sweep(std::span<const Record> records, std::span<const Prediction> predictions,
                  std::span<const double> tau_grid, std::span<const double> radius_grid,
                  MatchMode mode = MatchMode::kTrueLabel);

std::string format_optional(const std::optional<double>& v);

/// Header: fold,tau,r,tp,tn,fp,fn,tpr,tnr,ppv,rediscovery,ci_tpr_low,...
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, std::string_view fold, double tau, double radius,
                       const MetricsReport& m);
void write_sweep_csv(std::ostream& os, const SweepResult& result);

}  // namespace melvin
