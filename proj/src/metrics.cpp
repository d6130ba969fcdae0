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

#include "melvin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "melvin/errors.hpp"

namespace melvin {

std::string to_string(MatchMode mode) {
  return mode == MatchMode::kTrueLabel ? "true_label" : "target_set";
}

MatchMode parse_match_mode(std::string_view s) {
  if (s == "true_label") return MatchMode::kTrueLabel;
  if (s == "target_set") return MatchMode::kTargetSet;
  throw ConfigurationError("unknown match mode '" + std::string(s) + "'");
}

Rate wilson_rate(long successes, long trials, double z) {
  if (trials <= 0) return {};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<SrvLabel> target_set(std::span<const Record> records) {
  std::set<SrvLabel> s;
  for (const auto& r : records) {
    if (r.y_e && r.srv) s.insert(*r.srv);
  }
  return {s.begin(), s.end()};
}

namespace {

double distance(const SrvLabel& y, const SrvPrediction<double>& p) {
  const double dn = y.n - p.n_hat, dm = y.m - p.m_hat, dk = y.k - p.k_hat;
  return std::sqrt(dn * dn + dm * dm + dk * dk);
}

// Smallest distance from the prediction to the match set; empty if the set is.
std::optional<double> match_distance(const SrvPrediction<double>& pred,
                                     const std::optional<SrvLabel>& true_srv, MatchMode mode,
                                     std::span<const SrvLabel> targets) {
  if (mode == MatchMode::kTrueLabel) {
    if (!true_srv) return std::nullopt;
    return distance(*true_srv, pred);
  }
  std::optional<double> best;
  for (const auto& y : targets) {
    const double d = distance(y, pred);
    if (!best || d < *best) best = d;
  }
  return best;
}

}  // namespace

bool classify_interesting(double p_e, const SrvPrediction<double>& srv_pred,
                          const std::optional<SrvLabel>& true_srv, const InterestCriterion& c,
                          std::span<const SrvLabel> targets) {
  if (!(p_e > c.tau)) return false;
  const auto d = match_distance(srv_pred, true_srv, c.mode, targets);
  return d && *d < c.radius;
}

Flags classify_all(std::span<const Record> records, std::span<const Prediction> predictions,
                               const InterestCriterion& criterion, long* missing_srv) {
  if (records.size() != predictions.size()) throw StructuralError("records and predictions differ in length");
  const auto targets = criterion.mode == MatchMode::kTargetSet ? target_set(records) : std::vector<SrvLabel>{};
  Flags out(records.size());
  long missing = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (criterion.mode == MatchMode::kTrueLabel && !records[i].srv) ++missing;
    out[i] = classify_interesting(predictions[i].p_e, predictions[i].srv, records[i].srv, criterion, targets);
  }
  if (missing_srv) *missing_srv = missing;
  return out;
}

std::optional<double> rediscovery_ratio(std::span<const Record> records,
                                        std::span<const std::uint8_t> interesting) {
  std::map<SrvLabel, std::pair<long, long>> per_srv;  // (rediscovered, total)
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].y_e || !records[i].srv) continue;
    auto& c = per_srv[*records[i].srv];
    c.first += interesting[i] ? 1 : 0;
    c.second += 1;
  }
  if (per_srv.empty()) return std::nullopt;
  long hit = 0;
  for (const auto& [srv, c] : per_srv) {
    // Integer form of rediscovered / total >= 0.2.
    if (5 * c.first >= c.second) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(per_srv.size());
}

std::optional<double> rediscovery_ratio(std::span<const Record> records,
                                        std::span<const Prediction> predictions,
                                        const InterestCriterion& criterion) {
  return rediscovery_ratio(records, classify_all(records, predictions, criterion));
}

MetricsReport confusion(std::span<const Record> records, std::span<const std::uint8_t> interesting) {
  if (records.size() != interesting.size()) throw StructuralError("records and flags differ in length");
  MetricsReport m;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool pos = records[i].y_e;
    if (interesting[i]) {
      (pos ? m.tp : m.fp)++;
    } else {
      (pos ? m.fn : m.tn)++;
    }
  }
  m.tpr = wilson_rate(m.tp, m.tp + m.fn);
  m.tnr = wilson_rate(m.tn, m.tn + m.fp);
  m.ppv = wilson_rate(m.tp, m.tp + m.fp);
  m.rediscovery_ratio = rediscovery_ratio(records, interesting);
  return m;
}

MetricsReport confusion(std::span<const Record> records, std::span<const Prediction> predictions,
                        const InterestCriterion& criterion) {
  long missing = 0;
  const auto flags = classify_all(records, predictions, criterion, &missing);
  MetricsReport m = confusion(records, flags);
  m.missing_srv = missing;
  return m;
}

std::vector<double> default_tau_grid() {
  std::vector<double> out;
  for (int i = 100; i >= 0; --i) out.push_back(i / 100.0);
  return out;
}

std::vector<double> default_radius_grid() {
  std::vector<double> out;
  for (int i = 5; i <= 70; ++i) out.push_back(i / 10.0);
  return out;
}

SweepResult sweep(std::span<const Record> records, std::span<const Prediction> predictions,
                  std::span<const double> tau_grid, std::span<const double> radius_grid, MatchMode mode) {
  if (records.size() != predictions.size()) throw StructuralError("records and predictions differ in length");
  const auto targets = mode == MatchMode::kTargetSet ? target_set(records) : std::vector<SrvLabel>{};
  std::vector<std::optional<double>> dist(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    dist[i] = match_distance(predictions[i].srv, records[i].srv, mode, targets);
  }

  SweepResult result;
  result.rows.reserve(tau_grid.size() * radius_grid.size());
  Flags flags(records.size());
  double ap_sum = 0.0;
  int ap_count = 0;
  for (double r : radius_grid) {
    double ap = 0.0;
    double prev_recall = 0.0;
    bool defined = false;
    for (double tau : tau_grid) {
      for (std::size_t i = 0; i < records.size(); ++i) {
        flags[i] = predictions[i].p_e > tau && dist[i] && *dist[i] < r;
      }
      MetricsReport m = confusion(records, flags);
      if (mode == MatchMode::kTrueLabel) {
        m.missing_srv = static_cast<long>(std::count_if(records.begin(), records.end(),
                                                        [](const Record& x) { return !x.srv; }));
      }
      if (m.tpr.value) {
        defined = true;
        const double recall = *m.tpr.value;
        if (recall > prev_recall && m.ppv.value) ap += (recall - prev_recall) * *m.ppv.value;
        prev_recall = std::max(prev_recall, recall);
      }
      result.rows.push_back({tau, r, m});
    }
    if (defined) {
      result.average_precision.push_back(ap);
      ap_sum += ap;
      ++ap_count;
    } else {
      result.average_precision.push_back(std::nullopt);
    }
  }
  if (ap_count > 0) result.mean_average_precision = ap_sum / ap_count;
  return result;
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(10) << *v;
  return os.str();
}

void write_metrics_header(std::ostream& os) {
  os << "fold,tau,r,tp,tn,fp,fn,tpr,tnr,ppv,rediscovery,"
        "ci_tpr_low,ci_tpr_high,ci_tnr_low,ci_tnr_high,ci_ppv_low,ci_ppv_high\n";
}

void write_metrics_row(std::ostream& os, std::string_view fold, double tau, double radius,
                       const MetricsReport& m) {
  os << fold << ',' << format_optional(tau) << ',' << format_optional(radius) << ',' << m.tp << ','
     << m.tn << ',' << m.fp << ',' << m.fn << ',' << format_optional(m.tpr.value) << ','
     << format_optional(m.tnr.value) << ',' << format_optional(m.ppv.value) << ','
     << format_optional(m.rediscovery_ratio) << ',' << format_optional(m.tpr.low) << ','
     << format_optional(m.tpr.high) << ',' << format_optional(m.tnr.low) << ','
     << format_optional(m.tnr.high) << ',' << format_optional(m.ppv.low) << ','
     << format_optional(m.ppv.high) << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  write_metrics_header(os);
  for (const auto& row : result.rows) write_metrics_row(os, "sweep", row.tau, row.radius, row.metrics);
}

}  // namespace melvin
