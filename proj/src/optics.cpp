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

#include "melvin/optics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "melvin/errors.hpp"
#include "melvin/random.hpp"

namespace melvin {

namespace {

char path_char(int p) { return static_cast<char>('a' + p); }

int parse_path(std::string_view s) {
  if (s.size() != 1 || s[0] < 'a' || s[0] >= 'a' + kNumPaths) {
    throw StructuralError("bad path '" + std::string(s) + "'");
  }
  return s[0] - 'a';
}

void check_path(int p) {
  if (p < 0 || p >= kNumPaths) throw StructuralError("path id out of range");
}

struct Branch {
  Mode mode;
  Complex amp;
};

// Image of a single photon under e; at most two branches.
int transform(const Element& e, Mode in, Branch out[2]) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  switch (e.kind) {
    case ElementKind::kHologram:
      if (in.path != e.path) break;
      out[0] = {{in.path, in.oam + e.shift}, 1.0};
      return 1;
    case ElementKind::kMirror:
      if (in.path != e.path) break;
      out[0] = {{in.path, -in.oam}, 1.0};
      return 1;
    case ElementKind::kDovePrism:
      if (in.path != e.path) break;
      out[0] = {{in.path, -in.oam}, in.oam % 2 == 0 ? 1.0 : -1.0};
      return 1;
    case ElementKind::kBeamSplitter: {
      if (in.path != e.path && in.path != e.second_path) break;
      const int other = in.path == e.path ? e.second_path : e.path;
      out[0] = {{other, in.oam}, {kInvSqrt2, 0.0}};
      out[1] = {{in.path, -in.oam}, {0.0, kInvSqrt2}};
      return 2;
    }
  }
  out[0] = {in, 1.0};
  return 1;
}

}  // namespace

Element Element::beam_splitter(int p, int q) {
  check_path(p);
  check_path(q);
  if (p == q) throw StructuralError("beam splitter needs two distinct paths");
  return {ElementKind::kBeamSplitter, std::min(p, q), std::max(p, q), 0};
}

Element Element::hologram(int p, int shift) {
  check_path(p);
  if (shift == 0 || std::abs(shift) > kMaxShift) {
    throw StructuralError("hologram shift must be nonzero with |shift| <= " +
                          std::to_string(kMaxShift));
  }
  return {ElementKind::kHologram, p, -1, shift};
}

Element Element::dove_prism(int p) {
  check_path(p);
  return {ElementKind::kDovePrism, p, -1, 0};
}

Element Element::mirror(int p) {
  check_path(p);
  return {ElementKind::kMirror, p, -1, 0};
}

std::string to_token(const Element& e) {
  std::string s;
  switch (e.kind) {
    case ElementKind::kBeamSplitter:
      return std::string("BS(") + path_char(e.path) + "," + path_char(e.second_path) + ")";
    case ElementKind::kHologram:
      return std::string("HOLO(") + path_char(e.path) + "," + (e.shift > 0 ? "+" : "-") +
             std::to_string(std::abs(e.shift)) + ")";
    case ElementKind::kDovePrism:
      return std::string("DP(") + path_char(e.path) + ")";
    case ElementKind::kMirror:
      return std::string("REFL(") + path_char(e.path) + ")";
  }
  return s;
}

Element parse_token(std::string_view token) {
  const auto open = token.find('(');
  if (open == std::string_view::npos || token.back() != ')') {
    throw StructuralError("malformed element token '" + std::string(token) + "'");
  }
  const std::string_view name = token.substr(0, open);
  const std::string_view args = token.substr(open + 1, token.size() - open - 2);
  const auto comma = args.find(',');
  const std::string_view first = args.substr(0, comma);
  const std::string_view second =
      comma == std::string_view::npos ? std::string_view{} : args.substr(comma + 1);

  if (name == "BS" && !second.empty()) {
    return Element::beam_splitter(parse_path(first), parse_path(second));
  }
  if (name == "HOLO" && second.size() >= 2 && (second[0] == '+' || second[0] == '-')) {
    int magnitude = 0;
    for (char c : second.substr(1)) {
      if (c < '0' || c > '9') throw StructuralError("bad hologram shift in '" + std::string(token) + "'");
      magnitude = magnitude * 10 + (c - '0');
    }
    return Element::hologram(parse_path(first), second[0] == '-' ? -magnitude : magnitude);
  }
  if (name == "DP" && second.empty()) return Element::dove_prism(parse_path(first));
  if (name == "REFL" && second.empty()) return Element::mirror(parse_path(first));
  throw StructuralError("unknown element token '" + std::string(token) + "'");
}

std::vector<Element> toolbox() {
  std::vector<Element> out;
  for (int p = 0; p < kNumPaths; ++p) {
    for (int q = p + 1; q < kNumPaths; ++q) out.push_back(Element::beam_splitter(p, q));
  }
  for (int p = 0; p < kNumPaths; ++p) {
    for (int s = -kMaxShift; s <= kMaxShift; ++s) {
      if (s != 0) out.push_back(Element::hologram(p, s));
    }
  }
  for (int p = 0; p < kNumPaths; ++p) out.push_back(Element::dove_prism(p));
  for (int p = 0; p < kNumPaths; ++p) out.push_back(Element::mirror(p));
  return out;
}

std::string to_string(const Setup& setup) {
  std::string out;
  for (std::size_t i = 0; i < setup.elements.size(); ++i) {
    if (i) out += ' ';
    out += to_token(setup.elements[i]);
  }
  return out;
}

Setup parse_setup(std::string_view text) {
  Setup setup;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    const auto end = std::min(text.find(' ', pos), text.size());
    setup.elements.push_back(parse_token(text.substr(pos, end - pos)));
    pos = end;
  }
  return setup;
}

std::vector<std::string> tokens(const Setup& setup) {
  std::vector<std::string> out;
  out.reserve(setup.size());
  for (const auto& e : setup.elements) out.push_back(to_token(e));
  return out;
}

QuantumState initial_state(int max_oam) {
  if (max_oam < 0) throw StructuralError("max_oam must be non-negative");
  QuantumState state(4);
  const double amp = 1.0 / static_cast<double>(2 * max_oam + 1);
  for (int l = -max_oam; l <= max_oam; ++l) {
    for (int m = -max_oam; m <= max_oam; ++m) {
      state.add(Ket{{kPathA, l}, {kPathB, -l}, {kPathC, m}, {kPathD, -m}}, amp);
    }
  }
  return state;
}

QuantumState apply_element(const QuantumState& state, const Element& e, ApplyStats* stats) {
  QuantumState out(state.photon_count());
  long clipped = 0;
  Branch branches[kMaxPhotons][2];
  int counts[kMaxPhotons];
  std::array<Mode, kMaxPhotons> modes{};

  for (const auto& [ket, amp] : state.terms()) {
    const int n = ket.size();
    int combos = 1;
    for (int i = 0; i < n; ++i) {
      counts[i] = transform(e, ket[i], branches[i]);
      combos *= counts[i];
    }
    for (int c = 0; c < combos; ++c) {
      int rest = c;
      Complex a = amp;
      bool drop = false;
      for (int i = 0; i < n; ++i) {
        const Branch& b = branches[i][rest % counts[i]];
        rest /= counts[i];
        if (std::abs(b.mode.oam) > kHardOamCutoff) drop = true;
        modes[static_cast<std::size_t>(i)] = b.mode;
        a *= b.amp;
      }
      if (drop) {
        ++clipped;
        continue;
      }
      out.add(Ket(std::span<const Mode>(modes.data(), static_cast<std::size_t>(n))), a);
    }
  }
  if (stats) stats->clipped_terms += clipped;
  if (clipped > 0 && !out.empty()) out = normalize(out);
  return out;
}

SimResult postselect(const QuantumState& state) {
  SimResult result;
  QuantumState selected(3);
  double kept = 0.0;
  for (const auto& [ket, amp] : state.terms()) {
    if (ket.size() != 4) continue;
    if (ket[0].path != kPathA || ket[1].path != kPathB || ket[2].path != kPathC ||
        ket[3].path != kPathD || ket[3].oam != 0) {
      continue;
    }
    selected.add(Ket::from_oams({ket[0].oam, ket[1].oam, ket[2].oam}), amp);
    kept += std::norm(amp);
  }
  const double total = state.squared_norm();
  if (selected.empty() || total <= 0.0) return result;
  result.postselect_prob = kept / total;
  result.state = normalize(selected);
  return result;
}

SimResult run_setup(const Setup& setup, int max_oam) {
  QuantumState state = initial_state(max_oam);
  ApplyStats stats;
  for (const auto& e : setup.elements) {
    state = apply_element(state, e, &stats);
    if (state.empty()) break;
  }
  SimResult result = postselect(state);
  result.clipped_terms = stats.clipped_terms;
  return result;
}

Setup random_setup(std::uint64_t seed, int min_length, int max_length) {
  Rng rng(seed);
  Setup setup;
  const auto length = rng.range(min_length, max_length);
  setup.elements.reserve(static_cast<std::size_t>(length));
  static constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (long long i = 0; i < length; ++i) {
    switch (static_cast<ElementKind>(rng.index(kNumElementKinds))) {
      case ElementKind::kBeamSplitter: {
        const auto& pq = kPairs[rng.index(6)];
        setup.elements.push_back(Element::beam_splitter(pq[0], pq[1]));
        break;
      }
      case ElementKind::kHologram: {
        const int p = static_cast<int>(rng.index(kNumPaths));
        int s = static_cast<int>(rng.index(2 * kMaxShift)) - kMaxShift;  // -3..2
        if (s >= 0) ++s;                                                  // skip 0
        setup.elements.push_back(Element::hologram(p, s));
        break;
      }
      case ElementKind::kDovePrism:
        setup.elements.push_back(Element::dove_prism(static_cast<int>(rng.index(kNumPaths))));
        break;
      case ElementKind::kMirror:
        setup.elements.push_back(Element::mirror(static_cast<int>(rng.index(kNumPaths))));
        break;
    }
  }
  return setup;
}

}  // namespace melvin
