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

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace melvin {

using Complex = std::complex<double>;

/// Amplitudes with modulus at or below this are dropped.
inline constexpr double kAmplitudeEpsilon = 1e-12;
/// Singular values at or below tol * sigma_max do not count towards a rank.
inline constexpr double kRankTolerance = 1e-10;
inline constexpr int kMaxPhotons = 4;

/// One photon: spatial path id and orbital angular momentum.
struct Mode {
  int path = 0;
  int oam = 0;
  auto operator<=>(const Mode&) const = default;
};

/// Occupied modes of a basis state, kept sorted so that equal physical
/// configurations compare equal. Kets with several photons in the same path
/// stand for products of bosonic creation operators.
class Ket {
 public:
  Ket() = default;
  Ket(std::initializer_list<Mode> modes);
  explicit Ket(std::span<const Mode> modes);

  /// Distinguishable-particle ket: photon i sits in path i with the given OAM.
  static Ket from_oams(std::initializer_list<int> oams);
  static Ket from_oams(std::span<const int> oams);

  int size() const { return size_; }
  const Mode& operator[](int i) const { return modes_[static_cast<std::size_t>(i)]; }
  std::span<const Mode> modes() const { return {modes_.data(), static_cast<std::size_t>(size_)}; }

  /// Copy of this ket with photon i replaced, re-sorted.
  Ket replaced(int i, Mode m) const;
  /// Ket without photon i.
  Ket erased(int i) const;

  /// Squared norm of the Fock state this ket denotes: product of occupation
  /// factorials. 1 whenever all modes are distinct.
  double fock_weight() const;

  auto operator<=>(const Ket&) const = default;

 private:
  void sort();

  std::array<Mode, kMaxPhotons> modes_{};
  std::uint8_t size_ = 0;
};

/// Sparse superposition of kets with a fixed photon count.
class QuantumState {
 public:
  using Terms = std::map<Ket, Complex>;

  QuantumState() = default;
  explicit QuantumState(int photon_count) : photon_count_(photon_count) {}

  /// Accumulates amp onto ket. Throws StructuralError on arity mismatch.
  void add(const Ket& ket, Complex amp);

  int photon_count() const { return photon_count_; }
  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  Complex amplitude(const Ket& ket) const;

  /// Sum of |amp|^2 weighted by each ket's Fock norm.
  double squared_norm() const;

 private:
  Terms terms_;
  int photon_count_ = 0;
};

QuantumState add_term(QuantumState state, const Ket& ket, Complex amp);

/// Throws NormalizationError for a zero state.
QuantumState normalize(const QuantumState& state);

QuantumState scale(const QuantumState& state, Complex factor);

/// <a|b>, antilinear in a.
Complex inner_product(const QuantumState& a, const QuantumState& b);

/// Amplitudes arranged as (modes of one photon) x (joint modes of the rest).
Eigen::MatrixXcd coefficient_matrix(const QuantumState& state, int particle);

/// Schmidt rank of the bipartition {particle} vs rest.
int reduced_density_rank(const QuantumState& state, int particle,
                         double tol = kRankTolerance);

/// Renders e.g. "0.50|0,0,0> + 0.50|1,0,1>". Kets whose paths are exactly
/// 0..n-1 print their OAM values only; others print path:oam pairs.
std::string render(const QuantumState& state, int precision = 2);

}  // namespace melvin
