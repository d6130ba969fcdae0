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

#include "melvin/state.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

#include "melvin/errors.hpp"

namespace melvin {

Ket::Ket(std::initializer_list<Mode> modes) : Ket(std::span<const Mode>(modes.begin(), modes.size())) {}

Ket::Ket(std::span<const Mode> modes) {
  if (modes.size() > kMaxPhotons) {
    throw StructuralError("ket holds at most " + std::to_string(kMaxPhotons) + " photons");
  }
  std::copy(modes.begin(), modes.end(), modes_.begin());
  size_ = static_cast<std::uint8_t>(modes.size());
  sort();
}

Ket Ket::from_oams(std::initializer_list<int> oams) {
  return from_oams(std::span<const int>(oams.begin(), oams.size()));
}

Ket Ket::from_oams(std::span<const int> oams) {
  std::array<Mode, kMaxPhotons> modes{};
  if (oams.size() > kMaxPhotons) {
    throw StructuralError("ket holds at most " + std::to_string(kMaxPhotons) + " photons");
  }
  for (std::size_t i = 0; i < oams.size(); ++i) {
    modes[i] = Mode{static_cast<int>(i), oams[i]};
  }
  return Ket(std::span<const Mode>(modes.data(), oams.size()));
}

Ket Ket::replaced(int i, Mode m) const {
  Ket out = *this;
  out.modes_[static_cast<std::size_t>(i)] = m;
  out.sort();
  return out;
}

Ket Ket::erased(int i) const {
  Ket out;
  for (int j = 0; j < size_; ++j) {
    if (j != i) out.modes_[out.size_++] = modes_[static_cast<std::size_t>(j)];
  }
  return out;
}

double Ket::fock_weight() const {
  double w = 1.0;
  int run = 1;
  for (int i = 1; i < size_; ++i) {
    if (modes_[static_cast<std::size_t>(i)] == modes_[static_cast<std::size_t>(i - 1)]) {
      w *= ++run;
    } else {
      run = 1;
    }
  }
  return w;
}

void Ket::sort() { std::sort(modes_.begin(), modes_.begin() + size_); }

void QuantumState::add(const Ket& ket, Complex amp) {
  if (terms_.empty() && photon_count_ == 0) photon_count_ = ket.size();
  if (ket.size() != photon_count_) {
    throw StructuralError("ket arity " + std::to_string(ket.size()) +
                          " does not match photon count " + std::to_string(photon_count_));
  }
  auto [it, inserted] = terms_.try_emplace(ket, amp);
  if (!inserted) it->second += amp;
  if (std::abs(it->second) <= kAmplitudeEpsilon) terms_.erase(it);
}

Complex QuantumState::amplitude(const Ket& ket) const {
  auto it = terms_.find(ket);
  return it == terms_.end() ? Complex{} : it->second;
}

double QuantumState::squared_norm() const {
  double s = 0.0;
  for (const auto& [ket, amp] : terms_) s += std::norm(amp) * ket.fock_weight();
  return s;
}

QuantumState add_term(QuantumState state, const Ket& ket, Complex amp) {
  state.add(ket, amp);
  return state;
}

QuantumState normalize(const QuantumState& state) {
  const double norm = std::sqrt(state.squared_norm());
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NormalizationError("cannot normalize a state with norm " + std::to_string(norm));
  }
  return scale(state, Complex{1.0 / norm, 0.0});
}

QuantumState scale(const QuantumState& state, Complex factor) {
  QuantumState out(state.photon_count());
  for (const auto& [ket, amp] : state.terms()) out.add(ket, amp * factor);
  return out;
}

Complex inner_product(const QuantumState& a, const QuantumState& b) {
  if (!a.empty() && !b.empty() && a.photon_count() != b.photon_count()) {
    throw StructuralError("inner product of states with different photon counts");
  }
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  Complex sum{};
  for (const auto& [ket, amp] : small.terms()) {
    auto it = large.terms().find(ket);
    if (it == large.terms().end()) continue;
    const Complex lhs = &small == &a ? amp : it->second;
    const Complex rhs = &small == &a ? it->second : amp;
    sum += std::conj(lhs) * rhs * ket.fock_weight();
  }
  return sum;
}

Eigen::MatrixXcd coefficient_matrix(const QuantumState& state, int particle) {
  if (particle < 0 || particle >= state.photon_count()) {
    throw StructuralError("particle index " + std::to_string(particle) + " out of range for " +
                          std::to_string(state.photon_count()) + " photons");
  }
  std::map<Mode, Eigen::Index> rows;
  std::map<Ket, Eigen::Index> cols;
  for (const auto& [ket, amp] : state.terms()) {
    rows.try_emplace(ket[particle], 0);
    cols.try_emplace(ket.erased(particle), 0);
  }
  Eigen::Index r = 0;
  for (auto& [mode, idx] : rows) idx = r++;
  Eigen::Index c = 0;
  for (auto& [ket, idx] : cols) idx = c++;

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, c);
  for (const auto& [ket, amp] : state.terms()) {
    m(rows.at(ket[particle]), cols.at(ket.erased(particle))) += amp;
  }
  return m;
}

int reduced_density_rank(const QuantumState& state, int particle, double tol) {
  const Eigen::MatrixXcd m = coefficient_matrix(state, particle);
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  return static_cast<int>((sv.array() > tol * sv(0)).count());
}

namespace {

bool is_bare(const Ket& ket) {
  for (int i = 0; i < ket.size(); ++i) {
    if (ket[i].path != i) return false;
  }
  return true;
}

std::string format_real(double x, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << x;
  return os.str();
}

}  // namespace

std::string render(const QuantumState& state, int precision) {
  if (state.empty()) return "0";
  const double cut = 0.5 * std::pow(10.0, -precision);
  std::string out;
  bool first = true;
  for (const auto& [ket, amp] : state.terms()) {
    const bool has_re = std::abs(amp.real()) >= cut;
    const bool has_im = std::abs(amp.imag()) >= cut;
    std::string coef;
    bool negative = false;
    if (has_re && has_im) {
      coef = "(" + format_real(amp.real(), precision) + (amp.imag() < 0 ? "-" : "+") +
             format_real(std::abs(amp.imag()), precision) + "i)";
    } else if (has_im) {
      negative = amp.imag() < 0;
      coef = format_real(std::abs(amp.imag()), precision) + "i";
    } else {
      negative = amp.real() < 0;
      coef = format_real(std::abs(amp.real()), precision);
    }
    if (first) {
      out += negative ? "-" : "";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    out += coef + "|";
    const bool bare = is_bare(ket);
    for (int i = 0; i < ket.size(); ++i) {
      if (i) out += ",";
      if (!bare) out += std::string(1, static_cast<char>('a' + ket[i].path)) + ":";
      out += std::to_string(ket[i].oam);
    }
    out += ">";
  }
  return out;
}

}  // namespace melvin
