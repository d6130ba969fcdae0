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
#include <vector>

#include "melvin/dataset.hpp"
#include "melvin/optics.hpp"

namespace melvin {

/// Desk-scale default cutoff of the initial pairs.
inline constexpr int kGenerationMaxOam = 1;

struct GenerateConfig {
  long count = 50000;
  std::uint64_t seed = 0;
  int max_oam = kGenerationMaxOam;
  double test_fraction = kDefaultTestFraction;
  int extrapolation_rank = kExtrapolationRank;
  int threads = 1;
};

/// Simulates and labels one setup (split and fold left unassigned).
Record simulate_record(const Setup& setup, int max_oam = kGenerationMaxOam);

/// Draws setups from per-index seeds until `count` distinct setups are
/// labeled, then assigns splits and folds. Output depends only on the config
/// minus `threads`.
std::vector<Record> generate_records(const GenerateConfig& config);

/// Thread count from MELVIN_SURROGATE_THREADS, else hardware concurrency.
int default_thread_count();

}  // namespace melvin
