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

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "melvin/errors.hpp"
#include "melvin/labeler.hpp"
#include "melvin/optics.hpp"
#include "melvin/random.hpp"

namespace melvin {
namespace {

QuantumState single_photon(int path, int oam) {
  QuantumState s(1);
  s.add(Ket{Mode{path, oam}}, 1.0);
  return s;
}

double distance(const QuantumState& a, const QuantumState& b) {
  double d = 0.0;
  for (const auto& [ket, amp] : a.terms()) d = std::max(d, std::abs(amp - b.amplitude(ket)));
  for (const auto& [ket, amp] : b.terms()) d = std::max(d, std::abs(amp - a.amplitude(ket)));
  return d;
}

TEST(InitialState, TermCountsAndAmplitudes) {
  const QuantumState s1 = initial_state(1);
  EXPECT_EQ(s1.size(), 9u);
  for (const auto& [ket, amp] : s1.terms()) EXPECT_NEAR(std::abs(amp - Complex(1.0 / 3)), 0.0, 1e-15);
  const QuantumState s0 = initial_state(0);
  ASSERT_EQ(s0.size(), 1u);
  EXPECT_EQ(s0.terms().begin()->first, Ket::from_oams({0, 0, 0, 0}));
  const QuantumState s2 = initial_state(2);
  EXPECT_EQ(s2.size(), 25u);
  for (const auto& [ket, amp] : s2.terms()) EXPECT_NEAR(std::abs(amp - Complex(0.2)), 0.0, 1e-15);
  EXPECT_NEAR(s2.squared_norm(), 1.0, 1e-12);
}

TEST(InitialState, PairsAreAntiCorrelated) {
  const QuantumState s = initial_state(2);
  for (const auto& [ket, amp] : s.terms()) {
    EXPECT_EQ(ket[0].oam, -ket[1].oam);
    EXPECT_EQ(ket[2].oam, -ket[3].oam);
  }
}

TEST(ApplyElement, HologramShifts) {
  const QuantumState out = apply_element(single_photon(kPathA, 0), Element::hologram(kPathA, 2));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.amplitude(Ket{Mode{kPathA, 2}}), Complex(1.0));
  // Photons on other paths are untouched.
  const QuantumState other = apply_element(single_photon(kPathB, 1), Element::hologram(kPathA, 2));
  EXPECT_EQ(other.amplitude(Ket{Mode{kPathB, 1}}), Complex(1.0));
}

TEST(ApplyElement, MirrorFlipsSign) {
  for (int l = -3; l <= 3; ++l) {
    const QuantumState out = apply_element(single_photon(kPathA, l), Element::mirror(kPathA));
    EXPECT_EQ(out.amplitude(Ket{Mode{kPathA, -l}}), Complex(1.0));
  }
}

TEST(ApplyElement, DovePrismPhase) {
  for (int l = -3; l <= 3; ++l) {
    const QuantumState out = apply_element(single_photon(kPathC, l), Element::dove_prism(kPathC));
    EXPECT_EQ(out.amplitude(Ket{Mode{kPathC, -l}}), Complex(l % 2 == 0 ? 1.0 : -1.0));
  }
}

TEST(ApplyElement, BeamSplitterOnZeroOam) {
  const QuantumState out = apply_element(single_photon(kPathA, 0), Element::beam_splitter(kPathA, kPathB));
  const double r = 1 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(out.amplitude(Ket{Mode{kPathB, 0}}) - Complex(r, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(out.amplitude(Ket{Mode{kPathA, 0}}) - Complex(0, r)), 0.0, 1e-15);
}

TEST(ApplyElement, BeamSplitterKernelIsUnitary) {
  // Columns of the 2x2 kernel restricted to OAM 0 on paths a and b.
  const Element bs = Element::beam_splitter(kPathA, kPathB);
  Eigen::Matrix2cd m;
  const std::array<int, 2> paths{kPathA, kPathB};
  for (int col = 0; col < 2; ++col) {
    const QuantumState out = apply_element(single_photon(paths[col], 0), bs);
    for (int row = 0; row < 2; ++row) m(row, col) = out.amplitude(Ket{Mode{paths[row], 0}});
  }
  EXPECT_NEAR((m.adjoint() * m - Eigen::Matrix2cd::Identity()).norm(), 0.0, 1e-15);
  // Nonzero OAM: the reflected branch flips sign, so the kernel couples l and -l.
  const QuantumState out = apply_element(single_photon(kPathA, 2), bs);
  EXPECT_NEAR(std::norm(out.amplitude(Ket{Mode{kPathB, 2}})), 0.5, 1e-15);
  EXPECT_NEAR(std::norm(out.amplitude(Ket{Mode{kPathA, -2}})), 0.5, 1e-15);
}

TEST(ApplyElement, PreservesNorm) {
  for (const Element& e : toolbox()) {
    const QuantumState out = apply_element(initial_state(2), e);
    EXPECT_NEAR(out.squared_norm(), 1.0, 1e-10) << to_token(e);
  }
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    QuantumState s = initial_state(1);
    const melvin::Setup setup = random_setup(rng.next());
    for (const Element& e : setup.elements) {
      ApplyStats stats;
      s = apply_element(s, e, &stats);
      ASSERT_EQ(stats.clipped_terms, 0);
      EXPECT_NEAR(s.squared_norm(), 1.0, 1e-10);
    }
  }
}

TEST(ApplyElement, HongOuMandelCancellation) {
  // One photon in each input port at equal OAM 0: the coincidence term vanishes.
  QuantumState s(2);
  s.add(Ket{Mode{kPathA, 0}, Mode{kPathB, 0}}, 1.0);
  const QuantumState out = apply_element(s, Element::beam_splitter(kPathA, kPathB));
  EXPECT_EQ(out.amplitude(Ket{Mode{kPathA, 0}, Mode{kPathB, 0}}), Complex(0.0));
  EXPECT_NEAR(out.squared_norm(), 1.0, 1e-12);
}

TEST(ApplyElement, ClippingIsCountedAndRenormalized) {
  QuantumState s(1);
  s.add(Ket{Mode{kPathA, 11}}, 1.0);
  s.add(Ket{Mode{kPathA, 0}}, 1.0);
  ApplyStats stats;
  const QuantumState out = apply_element(normalize(s), Element::hologram(kPathA, 3), &stats);
  EXPECT_EQ(stats.clipped_terms, 1);
  EXPECT_EQ(out.size(), 1u);
  EXPECT_NEAR(out.squared_norm(), 1.0, 1e-12);
}

TEST(ApplyElement, InversesRecoverState) {
  const QuantumState s = initial_state(2);
  for (const Element& e : toolbox()) {
    QuantumState t;
    Complex phase = 1.0;
    switch (e.kind) {
      case ElementKind::kHologram:
        t = apply_element(apply_element(s, e), Element::hologram(e.path, -e.shift));
        break;
      case ElementKind::kMirror:
      case ElementKind::kDovePrism:
        t = apply_element(apply_element(s, e), e);
        break;
      case ElementKind::kBeamSplitter:
        t = s;
        for (int i = 0; i < 4; ++i) t = apply_element(t, e);
        // BS^4 = -1 per photon; every initial ket has one photon per path.
        phase = 1.0;
        break;
    }
    EXPECT_LT(distance(t, scale(s, phase)), 1e-10) << to_token(e);
  }
}

TEST(ApplyElement, BeamSplitterFourthPowerIsMinusOnePerPhoton) {
  const Element bs = Element::beam_splitter(kPathB, kPathD);
  for (int l = -2; l <= 2; ++l) {
    QuantumState t = single_photon(kPathD, l);
    for (int i = 0; i < 4; ++i) t = apply_element(t, bs);
    EXPECT_LT(distance(t, scale(single_photon(kPathD, l), -1.0)), 1e-12);
  }
}

TEST(ApplyElement, BeamSplitterSquaredIsPhasedSwapFlip) {
  const Element bs = Element::beam_splitter(kPathA, kPathC);
  for (int l = -2; l <= 2; ++l) {
    const QuantumState twice = apply_element(apply_element(single_photon(kPathA, l), bs), bs);
    ASSERT_EQ(twice.size(), 1u);
    EXPECT_NEAR(std::abs(twice.amplitude(Ket{Mode{kPathC, -l}}) - Complex(0, 1)), 0.0, 1e-15);
  }
}

TEST(Tokens, RoundTrip) {
  const auto box = toolbox();
  std::set<std::string> seen;
  for (const Element& e : box) {
    const std::string tok = to_token(e);
    EXPECT_EQ(parse_token(tok), e);
    seen.insert(tok);
  }
  EXPECT_EQ(seen.size(), box.size());
  EXPECT_EQ(to_token(Element::hologram(kPathA, 2)), "HOLO(a,+2)");
  EXPECT_EQ(to_token(Element::hologram(kPathD, -1)), "HOLO(d,-1)");
  EXPECT_EQ(to_token(Element::beam_splitter(kPathA, kPathB)), "BS(a,b)");
  EXPECT_EQ(to_token(Element::dove_prism(kPathC)), "DP(c)");
  EXPECT_EQ(to_token(Element::mirror(kPathD)), "REFL(d)");
  const std::string text = "BS(a,b) HOLO(a,+2) DP(c) REFL(d)";
  EXPECT_EQ(to_string(parse_setup(text)), text);
}

TEST(Tokens, MalformedThrows) {
  EXPECT_THROW(parse_token("BS(a,a)"), StructuralError);
  EXPECT_THROW(parse_token("HOLO(a,0)"), StructuralError);
  EXPECT_THROW(parse_token("HOLO(a,+4)"), StructuralError);
  EXPECT_THROW(parse_token("DP(e)"), StructuralError);
  EXPECT_THROW(parse_token("LENS(a)"), StructuralError);
  EXPECT_THROW(parse_token("REFL(a"), StructuralError);
}

TEST(RunSetup, MirrorPairsAreIdentity) {
  for (int lmax : {1, 2}) {
    const SimResult bare = run_setup(melvin::Setup{}, lmax);
    const SimResult twice = run_setup(parse_setup("REFL(a) REFL(a) REFL(c) REFL(c)"), lmax);
    ASSERT_TRUE(bare.valid());
    ASSERT_TRUE(twice.valid());
    EXPECT_LT(distance(*bare.state, *twice.state), 1e-12);
    EXPECT_NEAR(bare.postselect_prob, twice.postselect_prob, 1e-15);
  }
}

TEST(RunSetup, NoElementsGivesTriggeredPair) {
  const SimResult r = run_setup(melvin::Setup{}, 1);
  ASSERT_TRUE(r.valid());
  EXPECT_EQ(render(*r.state), "0.58|-1,1,0> + 0.58|0,0,0> + 0.58|1,-1,0>");
  EXPECT_NEAR(r.postselect_prob, 1.0 / 3, 1e-12);
}

TEST(RunSetup, TwoDimensionalTripartiteFixture) {
  const SimResult r = run_setup(parse_setup("BS(a,c) BS(b,c) DP(a) BS(a,d) BS(a,c)"), 1);
  ASSERT_TRUE(r.valid());
  EXPECT_EQ(schmidt_rank_vector(*r.state), (SrvLabel{2, 2, 2}));
}

TEST(RunSetup, VanishingComponentIsInvalid) {
  const SimResult hom = run_setup(parse_setup("BS(a,b)"), 1);
  EXPECT_FALSE(hom.valid());
  EXPECT_EQ(hom.postselect_prob, 0.0);
  EXPECT_EQ(label(hom).fold_rank, 0);
  // Trigger no longer carries OAM 0 in any branch.
  EXPECT_FALSE(run_setup(parse_setup("HOLO(d,+3)"), 1).valid());
}

TEST(RunSetup, PostselectedStatesAreThreePhotonBare) {
  for (int i = 0; i < 200; ++i) {
    const SimResult r = run_setup(random_setup(derive_seed(9, "post", i)), 1);
    if (!r.valid()) continue;
    EXPECT_EQ(r.state->photon_count(), 3);
    EXPECT_NEAR(r.state->squared_norm(), 1.0, 1e-12);
    EXPECT_GT(r.postselect_prob, 0.0);
    EXPECT_LE(r.postselect_prob, 1.0 + 1e-12);
    for (const auto& [ket, amp] : r.state->terms()) {
      for (int p = 0; p < 3; ++p) EXPECT_EQ(ket[p].path, p);
    }
  }
}

TEST(RunSetup, PureFunction) {
  const melvin::Setup setup = random_setup(77);
  const SimResult a = run_setup(setup, 2);
  const SimResult b = run_setup(setup, 2);
  ASSERT_EQ(a.valid(), b.valid());
  EXPECT_EQ(a.postselect_prob, b.postselect_prob);
  if (a.valid()) EXPECT_EQ(a.state->terms(), b.state->terms());
}

TEST(RandomSetup, Deterministic) {
  EXPECT_EQ(random_setup(123), random_setup(123));
  EXPECT_NE(random_setup(123), random_setup(124));
}

TEST(RandomSetup, AllLengthsObserved) {
  std::map<std::size_t, int> lengths;
  for (int i = 0; i < 10000; ++i) lengths[random_setup(derive_seed(1, "len", i)).size()]++;
  ASSERT_EQ(lengths.size(), 10u);
  EXPECT_EQ(lengths.begin()->first, 6u);
  EXPECT_EQ(lengths.rbegin()->first, 15u);
  // Chi-square against uniform, 9 degrees of freedom; 27.88 is the 0.001 quantile.
  double chi2 = 0.0;
  for (const auto& [len, count] : lengths) chi2 += std::pow(count - 1000.0, 2) / 1000.0;
  EXPECT_LT(chi2, 27.88);
}

TEST(RandomSetup, KindHistogramUniform) {
  std::array<long, kNumElementKinds> counts{};
  long total = 0;
  for (int i = 0; i < 10000; ++i) {
    for (const Element& e : random_setup(derive_seed(2, "kind", i)).elements) {
      counts[static_cast<std::size_t>(e.kind)]++;
      ++total;
    }
  }
  ASSERT_GT(total, 100000);
  for (long c : counts) EXPECT_NEAR(static_cast<double>(c) / total, 0.25, 0.05 * 0.25);
}

}  // namespace
}  // namespace melvin
