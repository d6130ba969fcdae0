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

#include "melvin/labeler.hpp"

#include <algorithm>
#include <cmath>

#include "melvin/errors.hpp"

namespace melvin {

SrvLabel SrvLabel::from_ranks(int r0, int r1, int r2) {
  int r[3] = {r0, r1, r2};
  std::sort(r, r + 3, std::greater<>());
  return {r[0], r[1], r[2]};
}

std::string to_string(const SrvLabel& srv) {
  return "(" + std::to_string(srv.n) + "," + std::to_string(srv.m) + "," + std::to_string(srv.k) + ")";
}

SrvLabel schmidt_rank_vector(const QuantumState& state, double tol) {
  if (state.photon_count() != 3) {
    throw StructuralError("Schmidt rank vector needs a three-photon state");
  }
  return SrvLabel::from_ranks(reduced_density_rank(state, 0, tol), reduced_density_rank(state, 1, tol),
                              reduced_density_rank(state, 2, tol));
}

namespace {

bool equal_moduli(const QuantumState& state, double modulus_tol) {
  if (state.size() < 2) return false;
  double lo = INFINITY;
  double hi = 0.0;
  for (const auto& [ket, amp] : state.terms()) {
    const double a = std::abs(amp);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return hi - lo <= modulus_tol * hi;
}

}  // namespace

bool is_maximally_entangled(const QuantumState& state, double modulus_tol, double rank_tol) {
  return equal_moduli(state, modulus_tol) && schmidt_rank_vector(state, rank_tol).n >= 2;
}

SampleLabel label(const QuantumState& state) {
  const SrvLabel srv = schmidt_rank_vector(state);
  if (srv.n <= 1) return {false, std::nullopt, 1};
  return {equal_moduli(state, kModulusTolerance), srv, srv.n};
}

SampleLabel label(const SimResult& result) {
  if (!result.valid()) return {false, std::nullopt, 0};
  return label(*result.state);
}

}  // namespace melvin
