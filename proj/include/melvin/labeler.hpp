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

#include <compare>
#include <optional>
#include <string>

#include "melvin/optics.hpp"
#include "melvin/state.hpp"

namespace melvin {

/// Relative tolerance on amplitude moduli for the equal-modulus test.
inline constexpr double kModulusTolerance = 1e-9;

/// Schmidt rank vector (n, m, k) with n >= m >= k >= 1.
struct SrvLabel {
  int n = 1;
  int m = 1;
  int k = 1;

  /// Sorts three per-photon ranks into non-increasing order.
  static SrvLabel from_ranks(int r0, int r1, int r2);

  auto operator<=>(const SrvLabel&) const = default;
};

std::string to_string(const SrvLabel& srv);

struct SampleLabel {
  bool y_e = false;
  std::optional<SrvLabel> srv;
  int fold_rank = 0;  // leading Schmidt rank; 0 = invalid state, 1 = product

  bool operator==(const SampleLabel&) const = default;
};

SrvLabel schmidt_rank_vector(const QuantumState& state, double tol = kRankTolerance);

/// All amplitudes share one modulus and the leading Schmidt rank is >= 2.
bool is_maximally_entangled(const QuantumState& state, double modulus_tol = kModulusTolerance,
                            double rank_tol = kRankTolerance);

SampleLabel label(const SimResult& result);
SampleLabel label(const QuantumState& state);

}  // namespace melvin
