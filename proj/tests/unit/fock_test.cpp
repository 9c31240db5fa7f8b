#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "phonon/fock.hpp"
#include "phonon/model.hpp"
#include "phonon/rng.hpp"

using phonon::kPi;
using phonon::fock::FockState;

namespace {

std::complex<double> element(const FockState& s, std::vector<std::uint8_t> row, std::vector<std::uint8_t> col) {
  const auto i = s.basis().find(row.data());
  const auto j = s.basis().find(col.data());
  if (i < 0 || j < 0) return 0.0;
  return s.rho()(i, j);
}

// Nearly pure |1> in mode "a": herald one half of a weak pair.
FockState single_photon(int cutoff, std::vector<std::string> extra = {}) {
  std::vector<std::string> modes = {"a", "h"};
  modes.insert(modes.end(), extra.begin(), extra.end());
  FockState s = FockState::vacuum(modes, cutoff);
  s.squeeze("a", "h", 1e-10, 0.0);
  s.project_click("h");
  s.normalize();
  s.trace_out("h");
  return s;
}

double max_abs_diff(const FockState& a, const FockState& b) { return (a.rho() - b.rho()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(FockState, VacuumHasNoQuanta) {
  for (int n : {1, 3, 6}) {
    const auto s = FockState::vacuum({"a", "b", "c"}, n);
    for (const auto& m : s.modes()) EXPECT_EQ(s.mean_photon_number(m), 0.0);
  }
}

TEST(FockState, ThermalGeometricDistribution) {
  const auto s = FockState::thermal({"a"}, {1.0}, 10);
  // Renormalized geometric series: 0.5 / (1 - 0.5^11).
  EXPECT_NEAR(s.joint_probability({{"a", 0}}), 0.5 / (1.0 - std::pow(0.5, 11)), 1e-14);
  EXPECT_NEAR(s.joint_probability({{"a", 0}}), 0.5, 1e-3);
  const auto t = FockState::thermal({"a"}, {0.09}, 6);
  EXPECT_NEAR(t.mean_photon_number("a"), 0.09, 1e-6);
}

TEST(FockState, SqueezeZeroIsIdentity) {
  auto s = FockState::thermal({"a", "b"}, {0.1, 0.2}, 4);
  const auto before = s;
  s.squeeze("a", "b", 0.0, 0.3);
  EXPECT_EQ(max_abs_diff(s, before), 0.0);
}

TEST(FockState, TwoModeSqueezedVacuumSeries) {
  auto s = FockState::vacuum({"a", "b"}, 12);
  s.squeeze("a", "b", 0.04, 0.0);
  EXPECT_NEAR(s.joint_probability({{"a", 1}, {"b", 1}}), (1.0 - 0.04) * 0.04, 1e-12);
  EXPECT_NEAR(s.joint_probability({{"a", 0}, {"b", 0}}), 1.0 - 0.04, 1e-12);

  auto w = FockState::vacuum({"o", "m"}, 4);
  w.squeeze("o", "m", 0.002, 0.0);
  // The single-pair branch carries weight p_w up to O(p_w^2).
  EXPECT_NEAR(w.joint_probability({{"o", 1}, {"m", 1}}), 0.002, 0.002 * 0.002 * 1.01);
}

TEST(FockState, BeamSplitterLimits) {
  auto s = single_photon(4, {"b"});
  const auto before = s;
  s.beam_splitter("a", "b", 1.0, 0.4);
  EXPECT_LT(max_abs_diff(s, before), 1e-15);

  s.beam_splitter("a", "b", 0.5, 0.0);
  EXPECT_NEAR(s.joint_probability({{"a", 1}, {"b", 0}}), 0.5, 1e-9);
  EXPECT_NEAR(s.joint_probability({{"a", 0}, {"b", 1}}), 0.5, 1e-9);

  // Read-out splitter: sin^2 = 0.007 moves a phonon into the optical mode with that probability.
  auto r = single_photon(3, {"o"});
  r.beam_splitter("o", "a", 1.0 - 0.007, 0.0);
  EXPECT_NEAR(r.joint_probability({{"o", 1}}), 0.007, 1e-9);
}

TEST(FockState, PhaseActions) {
  auto s = single_photon(3, {"b"});
  s.beam_splitter("a", "b", 0.5, 0.0);
  const auto before = s;
  s.phase("a", 0.0);
  EXPECT_EQ(max_abs_diff(s, before), 0.0);
  s.phase("a", 2.0 * kPi);
  EXPECT_LT(max_abs_diff(s, before), 1e-12);

  const auto c0 = element(before, {1, 0}, {0, 1});
  s.phase("a", kPi);
  const auto c1 = element(s, {1, 0}, {0, 1});
  EXPECT_GT(std::abs(c0), 0.49);
  EXPECT_NEAR(c1.real(), -c0.real(), 1e-12);
  EXPECT_NEAR(c1.imag(), -c0.imag(), 1e-12);
}

TEST(FockState, LossAndThermalNoise) {
  auto s = FockState::thermal({"a"}, {1.0}, 24);
  const auto before = s;
  s.loss("a", 1.0);
  EXPECT_LT(max_abs_diff(s, before), 1e-15);
  const double n0 = s.mean_photon_number("a");
  s.loss("a", 0.5);
  EXPECT_NEAR(s.mean_photon_number("a"), 0.5 * n0, 1e-12);
  EXPECT_NEAR(s.mean_photon_number("a"), 0.5, 1e-5);

  auto v = FockState::vacuum({"m"}, 6);
  v.thermal_noise("m", 0.022);
  EXPECT_NEAR(v.mean_photon_number("m"), 0.022, 1e-7);
}

TEST(FockState, ClickDistributionExamples) {
  const auto vac = FockState::vacuum({"a", "b"}, 3);
  EXPECT_DOUBLE_EQ(vac.click_distribution({{"A", {"a"}}, {"B", {"b"}}}).probability(0), 1.0);

  const auto th = FockState::thermal({"a"}, {1.0}, 40);
  EXPECT_NEAR(th.click_distribution({{"A", {"a"}}}).probability(1), 0.5, 1e-12);

  auto tms = FockState::vacuum({"a", "b"}, 5);
  tms.squeeze("a", "b", 0.002, 0.0);
  const auto d = tms.click_distribution({{"A", {"a"}}, {"B", {"b"}}});
  EXPECT_NEAR(d.all_click(3) / (d.all_click(1) * d.all_click(2)), 500.0, 1e-9 * 500.0);
}

// Channels other than squeezing and amplification never leave the truncated space.
TEST(FockProperty, PassiveChannelsPreserveTrace) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    phonon::SplitMix64 rng(seed);
    auto s = FockState::thermal({"a", "b", "c"}, {0.2 * rng.uniform(), 0.2 * rng.uniform(), 0.0}, 5);
    const double t0 = s.trace();
    for (int k = 0; k < 10; ++k) {
      switch (rng() % 3) {
        case 0: s.beam_splitter(rng() % 2 ? "a" : "b", "c", rng.uniform(), 2.0 * kPi * rng.uniform()); break;
        case 1: s.phase(rng() % 2 ? "a" : "c", 2.0 * kPi * rng.uniform()); break;
        default: s.loss(rng() % 2 ? "b" : "c", rng.uniform()); break;
      }
    }
    EXPECT_NEAR(s.trace(), t0, 1e-10) << "seed " << seed;
  }
}

TEST(FockProperty, SqueezeDeficitBoundedByTruncatedPairs) {
  for (int n : {2, 3, 4, 5, 6}) {
    for (double p : {0.002, 0.02}) {
      auto s = FockState::vacuum({"a", "b"}, n);
      s.squeeze("a", "b", p, 0.0);
      // Pairs k > N/2 are dropped: deficit = p^(floor(N/2)+1).
      const double bound = std::pow(p, n / 2 + 1);
      EXPECT_NEAR(s.truncation_deficit(), bound, 1e-12 + 1e-6 * bound) << "N=" << n << " p=" << p;
    }
  }
}

// Exact up to the dropped pair amplitude, p^((N/2 + 1)/2).
TEST(FockProperty, SqueezeThenAntiSqueezeIsIdentity) {
  for (double phi : {0.0, 0.7, 2.5}) {
    auto s = FockState::vacuum({"a", "b"}, 16);
    const auto before = s;
    s.squeeze("a", "b", 0.01, phi);
    s.squeeze("a", "b", 0.01, phi + kPi);
    EXPECT_LT(max_abs_diff(s, before), 1e-8);
  }
}

TEST(FockProperty, RandomCircuitsStayPositive) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    phonon::SplitMix64 rng(seed + 100);
    auto s = FockState::vacuum({"a", "b", "c"}, 4);
    for (int k = 0; k < 8; ++k) {
      switch (rng() % 5) {
        case 0: s.squeeze("a", rng() % 2 ? "b" : "c", 0.02 * rng.uniform(), 2.0 * kPi * rng.uniform()); break;
        case 1: s.beam_splitter("b", "c", rng.uniform(), 2.0 * kPi * rng.uniform()); break;
        case 2: s.phase("a", 2.0 * kPi * rng.uniform()); break;
        case 3: s.loss("c", rng.uniform()); break;
        default: s.thermal_noise("b", 0.2 * rng.uniform()); break;
      }
    }
    EXPECT_GE(s.min_eigenvalue(), -1e-9) << "seed " << seed;
    EXPECT_LT(s.hermiticity_error(), 1e-12);
  }
}

TEST(FockProperty, LossComposes) {
  for (const auto& [e1, e2] : std::vector<std::pair<double, double>>{{0.3, 0.9}, {0.5, 0.5}, {0.95, 0.1}}) {
    auto a = FockState::thermal({"m"}, {0.2}, 8);
    auto b = a;
    a.loss("m", e1);
    a.loss("m", e2);
    b.loss("m", e1 * e2);
    EXPECT_LT(max_abs_diff(a, b), 1e-10);
    EXPECT_NEAR(a.mean_photon_number("m"), b.mean_photon_number("m"), 1e-10);
  }
}

// Weak pairs in two time bins, heralded by one Stokes photon after a balanced splitter, leave the
// phonons in a maximally coherent single-excitation state.
TEST(FockProperty, HeraldedTimeBinCoherence) {
  const double p = 0.002;
  auto s = FockState::vacuum({"oE", "mE", "oL", "mL"}, 4);
  s.squeeze("oE", "mE", p, 0.0);
  s.squeeze("oL", "mL", p, 0.8);
  s.beam_splitter("oE", "oL", 0.5, 0.0);
  s.project_click("oE");
  s.trace_out("oE");
  s.trace_out("oL");
  s.normalize();
  const auto c = element(s, {1, 0}, {0, 1});
  EXPECT_NEAR(std::abs(c), 0.5, 3.0 * p);
  EXPECT_NEAR(s.joint_probability({{"mE", 1}, {"mL", 0}}), 0.5, 3.0 * p);
}
