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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "melvin/errors.hpp"
#include "melvin/metrics.hpp"
#include "melvin/random.hpp"

namespace melvin {
namespace {

Record rec(bool y_e, std::optional<SrvLabel> srv) {
  Record r;
  r.y_e = y_e;
  r.srv = srv;
  r.fold_rank = srv ? srv->n : 0;
  return r;
}

SrvPrediction<double> at(double n, double m, double k) { return {n, m, k}; }

Prediction oracle_prediction(const Record& r) {
  const SrvLabel y = r.srv.value_or(SrvLabel{1, 1, 1});
  return {r.y_e ? 1.0 : 0.0, at(y.n, y.m, y.k)};
}

// Random labelled fold with noisy predictions.
void random_fold(Rng& rng, int size, std::vector<Record>& recs, std::vector<Prediction>& preds) {
  for (int i = 0; i < size; ++i) {
    const int n = static_cast<int>(rng.range(0, 8));
    std::optional<SrvLabel> srv;
    if (n >= 2) {
      const int m = static_cast<int>(rng.range(1, n));
      srv = SrvLabel{n, m, static_cast<int>(rng.range(1, m))};
    }
    const bool y = srv && rng.bernoulli(0.4);
    recs.push_back(rec(y, srv));
    const SrvLabel base = srv.value_or(SrvLabel{1, 1, 1});
    preds.push_back({std::clamp((y ? 0.65 : 0.35) + rng.uniform(-0.4, 0.4), 0.0, 1.0),
                     at(base.n + rng.uniform(-4, 4), base.m + rng.uniform(-2, 2), base.k + rng.uniform(-2, 2))});
  }
}

TEST(Interesting, ThresholdAndRadius) {
  const InterestCriterion c;
  EXPECT_EQ(c.tau, 0.5);
  EXPECT_EQ(c.radius, 3.0);
  const SrvLabel y{4, 2, 2};
  EXPECT_NEAR(std::sqrt(0.25 + 0.25 + 0.01), 0.714, 1e-3);
  EXPECT_TRUE(classify_interesting(0.9, at(4.5, 2.5, 2.1), y, c));
  EXPECT_FALSE(classify_interesting(0.4, at(4, 2, 2), y, c));
  EXPECT_NEAR(std::sqrt(16 + 36 + 36), 9.38, 1e-2);
  EXPECT_FALSE(classify_interesting(0.9, at(8, 8, 8), y, c));
  // Strict comparisons on both thresholds.
  EXPECT_FALSE(classify_interesting(0.5, at(4, 2, 2), y, c));
  EXPECT_FALSE(classify_interesting(0.9, at(7, 2, 2), y, c));
}

TEST(Interesting, MissingSrvIsUninterestingAndCounted) {
  const std::vector<Record> recs{rec(false, std::nullopt), rec(true, SrvLabel{3, 2, 1})};
  const std::vector<Prediction> preds{{0.99, at(1, 1, 1)}, {0.99, at(3, 2, 1)}};
  long missing = 0;
  const Flags f = classify_all(recs, preds, InterestCriterion{}, &missing);
  EXPECT_EQ(f, (Flags{0, 1}));
  EXPECT_EQ(missing, 1);
  EXPECT_EQ(confusion(recs, preds, InterestCriterion{}).missing_srv, 1);
}

TEST(Interesting, TargetSetMode) {
  const std::vector<Record> recs{rec(true, SrvLabel{4, 2, 2}), rec(true, SrvLabel{4, 2, 2}),
                                 rec(false, SrvLabel{8, 8, 8}), rec(false, std::nullopt)};
  EXPECT_EQ(target_set(recs), (std::vector<SrvLabel>{{4, 2, 2}}));
  const InterestCriterion c{0.5, 3.0, MatchMode::kTargetSet};
  const std::vector<Prediction> preds(4, Prediction{0.9, at(4, 2, 2)});
  // The negative without an SRV still matches the positives' SRV set.
  EXPECT_EQ(classify_all(recs, preds, c), (Flags{1, 1, 1, 1}));
  EXPECT_EQ(parse_match_mode(to_string(MatchMode::kTargetSet)), MatchMode::kTargetSet);
  EXPECT_THROW(parse_match_mode("nearest"), ConfigurationError);
}

TEST(Confusion, RatesAndUndefined) {
  std::vector<Record> recs;
  Flags flags;
  for (int i = 0; i < 3; ++i) {
    recs.push_back(rec(true, SrvLabel{2, 2, 2}));
    flags.push_back(1);
  }
  recs.push_back(rec(true, SrvLabel{2, 2, 2}));
  flags.push_back(0);
  const MetricsReport m = confusion(recs, flags);
  EXPECT_EQ(m.tp, 3);
  EXPECT_EQ(m.fn, 1);
  EXPECT_EQ(*m.tpr.value, 0.75);
  EXPECT_FALSE(m.tnr.value.has_value());
  EXPECT_EQ(*m.ppv.value, 1.0);

  const std::vector<Record> negatives(5, rec(false, std::nullopt));
  const MetricsReport n = confusion(negatives, Flags(5, 0));
  EXPECT_EQ(*n.tnr.value, 1.0);
  EXPECT_FALSE(n.tpr.value.has_value());
  EXPECT_FALSE(n.ppv.value.has_value());
  EXPECT_FALSE(n.rediscovery_ratio.has_value());
}

TEST(Confusion, WilsonIntervalReferenceValues) {
  const Rate r = wilson_rate(3, 4);
  EXPECT_NEAR(*r.low, 0.3006, 1e-4);
  EXPECT_NEAR(*r.high, 0.9544, 1e-4);
  const Rate zero = wilson_rate(0, 10);
  EXPECT_EQ(*zero.low, 0.0);
  EXPECT_NEAR(*zero.high, 0.2775, 1e-4);
  const Rate all = wilson_rate(20, 20);
  EXPECT_NEAR(*all.low, 0.8389, 1e-4);
  EXPECT_EQ(*all.high, 1.0);
  EXPECT_FALSE(wilson_rate(0, 0).value.has_value());
}

TEST(Confusion, CountsCoverEveryRecord) {
  Rng rng(1);
  std::vector<Record> recs;
  std::vector<Prediction> preds;
  random_fold(rng, 500, recs, preds);
  for (MatchMode mode : {MatchMode::kTrueLabel, MatchMode::kTargetSet}) {
    const MetricsReport m = confusion(recs, preds, InterestCriterion{0.5, 3.0, mode});
    EXPECT_EQ(m.tp + m.tn + m.fp + m.fn, 500);
    for (const Rate* r : {&m.tpr, &m.tnr, &m.ppv}) {
      ASSERT_TRUE(r->value.has_value());
      EXPECT_GE(*r->value, 0.0);
      EXPECT_LE(*r->value, 1.0);
      EXPECT_LE(*r->low, *r->value);
      EXPECT_GE(*r->high, *r->value);
    }
  }
}

TEST(Confusion, OraclePredictorIsPerfect) {
  Rng rng(2);
  std::vector<Record> recs;
  std::vector<Prediction> ignored;
  random_fold(rng, 400, recs, ignored);
  std::vector<Prediction> preds;
  for (const auto& r : recs) preds.push_back(oracle_prediction(r));
  const MetricsReport m = confusion(recs, preds, InterestCriterion{});
  EXPECT_EQ(*m.tpr.value, 1.0);
  EXPECT_EQ(*m.tnr.value, 1.0);
  EXPECT_EQ(*m.ppv.value, 1.0);
  EXPECT_EQ(*m.rediscovery_ratio, 1.0);
}

TEST(Rediscovery, Definition) {
  std::vector<Record> recs;
  Flags flags;
  for (int i = 0; i < 10; ++i) {
    recs.push_back(rec(true, SrvLabel{4, 2, 2}));
    flags.push_back(i < 3);
  }
  for (int i = 0; i < 5; ++i) {
    recs.push_back(rec(true, SrvLabel{4, 3, 2}));
    flags.push_back(0);
  }
  recs.push_back(rec(false, SrvLabel{5, 5, 5}));  // negatives do not count
  flags.push_back(1);
  EXPECT_EQ(*rediscovery_ratio(recs, flags), 0.5);
  EXPECT_EQ(*rediscovery_ratio(recs, Flags(recs.size(), 1)), 1.0);
}

TEST(Rediscovery, ExactlyTwentyPercentCounts) {
  std::vector<Record> recs(10, rec(true, SrvLabel{3, 3, 3}));
  Flags flags(10, 0);
  flags[0] = flags[1] = 1;
  EXPECT_EQ(*rediscovery_ratio(recs, flags), 1.0);
  flags[1] = 0;
  EXPECT_EQ(*rediscovery_ratio(recs, flags), 0.0);
  EXPECT_FALSE(rediscovery_ratio(std::vector<Record>(3, rec(false, std::nullopt)), Flags(3, 1)).has_value());
}

TEST(Sweep, GridShapes) {
  const auto taus = default_tau_grid();
  const auto radii = default_radius_grid();
  ASSERT_EQ(taus.size(), 101u);
  ASSERT_EQ(radii.size(), 66u);
  EXPECT_EQ(taus.front(), 1.0);
  EXPECT_EQ(taus.back(), 0.0);
  EXPECT_EQ(taus[50], 0.5);
  EXPECT_EQ(radii.front(), 0.5);
  EXPECT_EQ(radii.back(), 7.0);
  EXPECT_EQ(radii[25], 3.0);
}

TEST(Sweep, MonotoneInTau) {
  Rng rng(3);
  std::vector<Record> recs;
  std::vector<Prediction> preds;
  random_fold(rng, 800, recs, preds);
  const auto taus = default_tau_grid();
  const auto radii = default_radius_grid();
  for (MatchMode mode : {MatchMode::kTrueLabel, MatchMode::kTargetSet}) {
    const SweepResult s = sweep(recs, preds, taus, radii, mode);
    ASSERT_EQ(s.rows.size(), taus.size() * radii.size());
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      for (std::size_t ti = 1; ti < taus.size(); ++ti) {
        // Grid descends in tau, so moving forward lowers the threshold.
        const auto& hi = s.rows[ri * taus.size() + ti - 1].metrics;
        const auto& lo = s.rows[ri * taus.size() + ti].metrics;
        EXPECT_LE(*hi.tpr.value, *lo.tpr.value);
        EXPECT_GE(*hi.tnr.value, *lo.tnr.value);
      }
    }
  }
}

TEST(Sweep, MatchesPointwiseConfusion) {
  Rng rng(4);
  std::vector<Record> recs;
  std::vector<Prediction> preds;
  random_fold(rng, 300, recs, preds);
  const std::vector<double> taus{0.7, 0.5, 0.2}, radii{1.0, 3.0};
  const SweepResult s = sweep(recs, preds, taus, radii);
  for (const auto& row : s.rows) {
    const MetricsReport m = confusion(recs, preds, InterestCriterion{row.tau, row.radius, MatchMode::kTrueLabel});
    EXPECT_EQ(row.metrics.tp, m.tp);
    EXPECT_EQ(row.metrics.fp, m.fp);
    EXPECT_EQ(row.metrics.tn, m.tn);
    EXPECT_EQ(row.metrics.fn, m.fn);
    EXPECT_EQ(row.metrics.rediscovery_ratio, m.rediscovery_ratio);
  }
}

TEST(Sweep, Limits) {
  Rng rng(5);
  std::vector<Record> recs;
  std::vector<Prediction> preds;
  random_fold(rng, 400, recs, preds);
  for (auto& p : preds) p.p_e = std::max(p.p_e, 1e-3);  // all strictly above tau = 0
  const std::vector<double> strict{1.0}, open{0.0}, small{0.5}, huge{std::numeric_limits<double>::infinity()};
  const SweepResult none = sweep(recs, preds, strict, small);
  EXPECT_EQ(*none.rows[0].metrics.tpr.value, 0.0);
  EXPECT_EQ(*none.rows[0].metrics.rediscovery_ratio, 0.0);
  const SweepResult all = sweep(recs, preds, open, huge);
  const long positives = std::count_if(recs.begin(), recs.end(), [](const Record& r) { return r.y_e; });
  // Records without an SRV never match in true-label mode, and all of them are negative.
  const long with_srv = std::count_if(recs.begin(), recs.end(), [](const Record& r) { return r.srv.has_value(); });
  EXPECT_DOUBLE_EQ(*all.rows[0].metrics.ppv.value, static_cast<double>(positives) / with_srv);
  const SweepResult all_targets = sweep(recs, preds, open, huge, MatchMode::kTargetSet);
  EXPECT_DOUBLE_EQ(*all_targets.rows[0].metrics.ppv.value, static_cast<double>(positives) / recs.size());
}

TEST(Sweep, OracleHasUnitMeanAveragePrecision) {
  Rng rng(6);
  std::vector<Record> recs;
  std::vector<Prediction> ignored;
  random_fold(rng, 600, recs, ignored);
  std::vector<Prediction> preds;
  for (const auto& r : recs) preds.push_back(oracle_prediction(r));
  const SweepResult s = sweep(recs, preds, default_tau_grid(), default_radius_grid());
  ASSERT_TRUE(s.mean_average_precision.has_value());
  EXPECT_EQ(*s.mean_average_precision, 1.0);
  for (const auto& ap : s.average_precision) EXPECT_EQ(*ap, 1.0);
}

TEST(Sweep, AveragePrecisionStepwise) {
  // Scores 0.9 (pos), 0.8 (neg), 0.7 (pos): precision 1 at recall 1/2, then
  // 2/3 at recall 1, so AP = 0.5 * 1 + 0.5 * 2/3.
  const std::vector<Record> recs{rec(true, SrvLabel{2, 2, 2}), rec(false, SrvLabel{2, 2, 2}),
                                 rec(true, SrvLabel{2, 2, 2})};
  const std::vector<Prediction> preds{{0.9, at(2, 2, 2)}, {0.8, at(2, 2, 2)}, {0.7, at(2, 2, 2)}};
  const std::vector<double> radii{1.0};
  const SweepResult s = sweep(recs, preds, default_tau_grid(), radii);
  EXPECT_NEAR(*s.average_precision[0], 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
}

TEST(Csv, MetricsRowFormat) {
  MetricsReport m;
  m.tp = 3;
  m.fn = 1;
  m.tpr = wilson_rate(3, 4);
  std::ostringstream os;
  write_metrics_header(os);
  write_metrics_row(os, "test", 0.5, 3.0, m);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header.substr(0, 50), "fold,tau,r,tp,tn,fp,fn,tpr,tnr,ppv,rediscovery,ci_");
  EXPECT_EQ(row.substr(0, 26), "test,0.5,3,3,0,0,1,0.75,,,");
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
}

}  // namespace
}  // namespace melvin
