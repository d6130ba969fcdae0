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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "melvin/state.hpp"

namespace melvin {

/// Path ids. Photons a, b, c are the post-selected signal photons; d carries
/// the trigger.
enum Path : int { kPathA = 0, kPathB = 1, kPathC = 2, kPathD = 3 };
inline constexpr int kNumPaths = 4;

inline constexpr int kDefaultMaxOam = 2;   // initial pair cutoff L_max
inline constexpr int kHardOamCutoff = 12;  // clip |oam| above this during evolution
inline constexpr int kMaxShift = 3;        // hologram |shift| bound
inline constexpr int kMinSetupLength = 6;
inline constexpr int kMaxSetupLength = 15;

enum class ElementKind { kBeamSplitter, kHologram, kDovePrism, kMirror };
inline constexpr int kNumElementKinds = 4;

struct Element {
  ElementKind kind = ElementKind::kMirror;
  int path = kPathA;
  int second_path = -1;  // beam splitter only; always > path
  int shift = 0;         // hologram only

  static Element beam_splitter(int p, int q);
  static Element hologram(int p, int shift);
  static Element dove_prism(int p);
  static Element mirror(int p);

  bool operator==(const Element&) const = default;
};

/// Token form: BS(a,b), HOLO(a,+2), DP(c), REFL(d).
std::string to_token(const Element& e);
/// Throws StructuralError on malformed tokens.
Element parse_token(std::string_view token);

/// Every element the toolbox can emit, in a fixed order.
std::vector<Element> toolbox();

struct Setup {
  std::vector<Element> elements;

  std::size_t size() const { return elements.size(); }
  bool operator==(const Setup&) const = default;
};

/// Space-separated tokens; this string is the model's input sentence.
std::string to_string(const Setup& setup);
Setup parse_setup(std::string_view text);
std::vector<std::string> tokens(const Setup& setup);

/// Two down-conversion pairs sum_{l,l'} |l,-l>_ab |l',-l'>_cd, |l|,|l'| <= max_oam.
QuantumState initial_state(int max_oam = kDefaultMaxOam);

struct ApplyStats {
  long clipped_terms = 0;
};

/// Applies one optical element. Branches whose OAM would leave
/// [-kHardOamCutoff, kHardOamCutoff] are dropped and counted in stats; the
/// state is renormalized when that happens.
QuantumState apply_element(const QuantumState& state, const Element& e,
                           ApplyStats* stats = nullptr);

struct SimResult {
  std::optional<QuantumState> state;  // three photons, paths a,b,c
  double postselect_prob = 0.0;
  long clipped_terms = 0;

  bool valid() const { return state.has_value(); }
};

/// Runs the setup on the initial state and post-selects one photon in each of
/// a, b, c with the trigger photon in d at OAM 0.
SimResult run_setup(const Setup& setup, int max_oam = kDefaultMaxOam);

/// Post-selection step of run_setup on an arbitrary four-photon state.
SimResult postselect(const QuantumState& state);

/// Uniform element kinds and parameters, uniform length; pure in the seed.
Setup random_setup(std::uint64_t seed, int min_length = kMinSetupLength,
                   int max_length = kMaxSetupLength);

}  // namespace melvin
