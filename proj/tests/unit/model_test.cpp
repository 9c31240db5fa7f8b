#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "phonon/config.hpp"
#include "phonon/errors.hpp"
#include "phonon/model.hpp"
#include "phonon/numeric.hpp"
#include "phonon/rng.hpp"

using namespace phonon;

namespace {

const std::string kConfigDir = PHONON_CONFIG_DIR;

const char* kMinimalBell = R"(
kind: BellTest
engine: gaussian
trials: 1000
seed: 1
cavity: {}
waveguide: {round_trip_time: 126.0e-9}
phases: {}
pulses:
  - {role: WriteEarly, scattering_probability: 0.0013}
  - {role: WriteLate, scattering_probability: 0.0013}
  - {role: ReadEarly, scattering_probability: 0.007}
  - {role: ReadLate, scattering_probability: 0.007}
)";

std::string bell_with(const std::string& noise) { return std::string(kMinimalBell) + "noise:\n" + noise; }

}  // namespace

TEST(Config, MinimalBellConfigLoads) {
  const auto c = parse_config(bell_with("  {}\n"));
  EXPECT_EQ(c.kind, ExperimentKind::BellTest);
  EXPECT_DOUBLE_EQ(c.scattering_probability(PulseRole::WriteEarly), 0.0013);
  EXPECT_DOUBLE_EQ(c.scattering_probability(PulseRole::ReadLate), 0.007);
  // Derived schedule times are filled in.
  EXPECT_NEAR(c.find_pulse(PulseRole::ReadLate)->center_time, 189e-9, 1e-15);
}

TEST(Config, ZeroInteractionIsValid) {
  const auto c = parse_config(R"(
kind: BellTest
engine: fock
trials: 10
seed: 0
cavity: {}
waveguide: {round_trip_time: 126.0e-9}
phases: {}
noise: {}
pulses:
  - {role: WriteEarly, scattering_probability: 0}
  - {role: WriteLate, scattering_probability: 0}
  - {role: ReadEarly, scattering_probability: 0}
  - {role: ReadLate, scattering_probability: 0}
)");
  for (auto role : kPulseRoles) EXPECT_EQ(c.scattering_probability(role), 0.0);
}

TEST(Config, NegativeOccupancyRejected) {
  try {
    parse_config(bell_with("  thermal_schedule: [-0.1, 0.0, 0.0, 0.0]\n"));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("probability/occupancy out of range"), std::string::npos) << e.what();
  }
}

TEST(Config, ParseErrorsCarryContext) {
  try {
    parse_config("kind: BellTest\npulses: [ {role: WriteEarly\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("<string>:3:"), std::string::npos) << e.what();
  }
  auto bad_engine = bell_with("  {}\n");
  bad_engine.replace(bad_engine.find("gaussian"), 8, "magic");
  EXPECT_THROW(parse_config(bad_engine), ValidationError);
  auto bad_tau = bell_with("  {}\n");
  bad_tau.replace(bad_tau.find("126.0e-9"), 8, "0");
  EXPECT_THROW(parse_config(bad_tau), ValidationError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"bell", "time_bin", "double_cross", "thermal_g2", "calibration"}) {
    EXPECT_NO_THROW(load_config(kConfigDir + "/" + name + ".yaml")) << name;
  }
}

TEST(Config, OverridesApplyByPath) {
  const auto c = parse_config(bell_with("  {}\n"), {ConfigOverride::parse("pulses.0.scattering_probability=0.001"),
                                             ConfigOverride::parse("seed=99")});
  EXPECT_DOUBLE_EQ(c.scattering_probability(PulseRole::WriteEarly), 0.001);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_THROW(ConfigOverride::parse("no-equals-sign"), ValidationError);
}

TEST(ConfigProperty, RoundTripIsFieldwiseEqual) {
  for (const char* name : {"bell", "time_bin", "double_cross", "thermal_g2", "calibration"}) {
    const auto c = load_config(kConfigDir + "/" + name + ".yaml");
    const auto again = parse_config(serialize_config(c));
    EXPECT_TRUE(again == c) << name;
    EXPECT_EQ(config_digest(again), config_digest(c)) << name;
  }
}

TEST(Energy, CalibrationAnchors) {
  const ScatteringCalibration cal;
  // Least squares over both write anchors; quoted to one significant figure.
  EXPECT_NEAR(scattering_probability_from_energy(26e-15, ProcessRole::Write, cal), 0.002, 1e-4);
  EXPECT_EQ(scattering_probability_from_energy(0.0, ProcessRole::Write, cal), 0.0);
  EXPECT_NEAR(scattering_probability_from_energy(13e-15, ProcessRole::Write, cal), 0.001, 1e-4);
  EXPECT_NEAR(scattering_probability_from_energy(112e-15, ProcessRole::Read, cal), 0.007, 1e-4);
}

TEST(Energy, ClippedBelowGuard) {
  const double p = scattering_probability_from_energy(1e-12, ProcessRole::Write, {}, 0.05);
  EXPECT_LT(p, 0.05);
  EXPECT_GT(p, 0.049);
}

TEST(EnergyProperty, HomogeneousBelowClip) {
  const ScatteringCalibration cal;
  for (double e : {1e-15, 7e-15, 26e-15, 100e-15, 250e-15}) {
    for (auto role : {ProcessRole::Write, ProcessRole::Read}) {
      const double f1 = scattering_probability_from_energy(e, role, cal);
      const double f2 = scattering_probability_from_energy(2.0 * e, role, cal);
      if (f2 < 0.049) EXPECT_NEAR(f2, 2.0 * f1, 1e-15);
    }
  }
}

TEST(PulseSequence, BellCenters) {
  const auto seq = build_pulse_sequence(ExperimentKind::BellTest, 126e-9, {});
  ASSERT_EQ(seq.pulses.size(), 4u);
  const double expected[] = {0.0, 63e-9, 126e-9, 189e-9};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(seq.pulses[i].center_time, expected[i], 1e-18);
    EXPECT_DOUBLE_EQ(seq.pulses[i].duration_fwhm, 30e-9);
  }
  EXPECT_FALSE(seq.pump.has_value());
}

TEST(PulseSequence, ThermalUsesContinuousRedPump) {
  const auto seq = build_pulse_sequence(ExperimentKind::ThermalG2Tau, 126e-9, {});
  EXPECT_TRUE(seq.pulses.empty());
  ASSERT_TRUE(seq.pump.has_value());
  EXPECT_EQ(seq.pump->detuning, Detuning::Red);
  EXPECT_TRUE(seq.pump->continuous);
}

TEST(PulseSequence, DegenerateRoundTripRejected) {
  EXPECT_THROW(build_pulse_sequence(ExperimentKind::BellTest, 0.0, {}), ValidationError);
}

TEST(PulseSequenceProperty, LateFollowsEarlyByHalfRoundTrip) {
  SplitMix64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const double tau = 10e-9 + 500e-9 * rng.uniform();
    for (auto kind : {ExperimentKind::DoubleCrossCorrelation, ExperimentKind::TimeBinEntanglement,
                      ExperimentKind::BellTest}) {
      const auto seq = build_pulse_sequence(kind, tau, {});
      auto time = [&](PulseRole r) {
        return std::find_if(seq.pulses.begin(), seq.pulses.end(), [&](const PulseSpec& p) { return p.role == r; })
            ->center_time;
      };
      EXPECT_DOUBLE_EQ(time(PulseRole::WriteLate) - time(PulseRole::WriteEarly), tau / 2.0);
      EXPECT_DOUBLE_EQ(time(PulseRole::ReadLate) - time(PulseRole::ReadEarly), tau / 2.0);
      for (const auto& p : seq.pulses) EXPECT_EQ(p.detuning, is_write(p.role) ? Detuning::Blue : Detuning::Red);
    }
  }
}

TEST(PhaseJitter, ZeroWidthIsExact) {
  SplitMix64 rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_phase_jitter(rng, 0.0), 0.0);
}

TEST(PhaseJitter, WidthStatistics) {
  // Empirical FWHM from the interquartile range of a Gaussian: FWHM = IQR * 2.3548 / 1.34898.
  SplitMix64 rng(2024);
  std::vector<double> x(100000);
  for (auto& v : x) v = sample_phase_jitter(rng, kPi / 7.0);
  std::sort(x.begin(), x.end());
  const double iqr = x[75000] - x[25000];
  EXPECT_NEAR(iqr * kFwhmPerSigma / 1.3489795003921634, kPi / 7.0, 0.02 * kPi / 7.0);

  EXPECT_NEAR(jitter_sigma(kPi / 20.0), 0.0667, 5e-5);
  double s2 = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = sample_phase_jitter(rng, kPi / 20.0);
    s2 += v * v;
  }
  EXPECT_NEAR(std::sqrt(s2 / 100000), 0.0667, 0.0667 * 0.01);
}

TEST(PhaseJitter, DeterministicForState) {
  SplitMix64 a(77), b(77);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_phase_jitter(a, 0.3), sample_phase_jitter(b, 0.3));
  EXPECT_THROW(jitter_sigma(-1.0), ValidationError);
}

TEST(PhaseSettingsProperty, PhiZeroTracksOffset) {
  SplitMix64 rng(3);
  PhaseSettings s(0.1, 0.2, 0.0);
  for (int i = 0; i < 200; ++i) {
    s.set_phi_off(20.0 * (rng.uniform() - 0.5));
    const double expected = wrap_phase(2.0 * s.phi_off() + kPi / 2.0);
    const double d = std::remainder(s.phi_0() - expected, 2.0 * kPi);
    EXPECT_NEAR(d, 0.0, 1e-12);
    EXPECT_GE(s.phi_0(), 0.0);
    EXPECT_LT(s.phi_0(), 2.0 * kPi);
  }
}

TEST(Waveguide, SelfConsistencyWarning) {
  WaveguideParams w;
  EXPECT_TRUE(w.warnings().empty());
  w.length = 300e-6;
  EXPECT_FALSE(w.warnings().empty());
  EXPECT_NO_THROW(w.validate());
  w.t1 = 100e-9;
  EXPECT_THROW(w.validate(), ValidationError);
}

TEST(Cavity, IntrinsicLossBounded) {
  CavityParams c;
  EXPECT_NO_THROW(c.validate());
  c.kappa_i = 2.0 * c.kappa;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Noise, DecreasingScheduleWarns) {
  const auto c = parse_config(bell_with("  thermal_schedule: [0.09, 0.05, 0.04, 0.03]\n"));
  const auto w = c.noise.warnings();
  EXPECT_FALSE(w.empty());
}

TEST(ChshDefaults, MaximizeIdealS) {
  for (double off : {0.0, 0.25 * kPi, 1.1}) {
    const auto s = default_chsh_settings(off);
    const auto pts = s.points();
    ASSERT_EQ(pts.size(), 4u);
    double e[4];
    for (int i = 0; i < 4; ++i) e[i] = std::cos(pts[i].first + pts[i].second + 2.0 * off);
    EXPECT_NEAR(std::abs(e[0] - e[1] + e[2] + e[3]), 2.0 * std::sqrt(2.0), 1e-12) << off;
  }
}
