#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "phonon/analysis.hpp"
#include "phonon/config.hpp"
#include "phonon/errors.hpp"
#include "phonon/protocol.hpp"
#include "phonon/workflow.hpp"

using namespace phonon;
using namespace phonon::analysis;

namespace {

const std::string kConfigDir = PHONON_CONFIG_DIR;

AnalysisResult value(double v, double s = 0.0) {
  AnalysisResult r;
  r.value = v;
  r.sigma = s;
  return r;
}

CoincidenceTable table(double n11, double n12, double n21, double n22) {
  CoincidenceTable t;
  t.n = {{{n11, n12}, {n21, n22}}};
  t.write_singles = {n11 + n12 + 100, n21 + n22 + 100};
  t.read_singles = {n11 + n21 + 100, n12 + n22 + 100};
  t.trials = 1e6;
  return t;
}

// E at phi_w for a curve with negative-slope zero at phi0 and read phase phi_r.
double ideal_e(double amplitude, double phi0, double phi_w, double phi_r) {
  return amplitude * std::sin(phi0 - phi_w - phi_r);
}

double circular_distance(double a, double b, double period) { return std::abs(std::remainder(a - b, period)); }

}  // namespace

TEST(G2Cross, UncorrelatedIsOne) {
  const auto g = g2_cross(1000, 1000, 1, 1e6);
  EXPECT_DOUBLE_EQ(g.value, 1.0);
  EXPECT_GT(g.sigma, 0.0);
}

TEST(G2Cross, ZeroSinglesFlagged) {
  EXPECT_TRUE(g2_cross(0, 1000, 0, 1e6).flagged);
  EXPECT_THROW(g2_cross(1, 1, 1, 0), ValidationError);
}

TEST(G2Cross, ThermalSourceApproachesTwo) {
  // Weak thermal light on a balanced splitter in front of two threshold detectors.
  Circuit c;
  c.add_mode("a").add_mode("b").thermal_loss("a", 0.0, 1e-3).beam_splitter("a", "b", 0.5);
  const auto d = make_gaussian_engine()->evaluate(c, {{"A", {"a"}}, {"B", {"b"}}});
  const auto g = g2_cross(d.all_click(1) * 1e12, d.all_click(2) * 1e12, d.all_click(3) * 1e12, 1e12);
  EXPECT_NEAR(g.value, 2.0, 2e-3);
}

TEST(G2Cross, MeasuredEarlyEarlyCorrelation) {
  const auto c = load_config(kConfigDir + "/double_cross.yaml");
  const auto r = protocol::run_experiment(c, {.sample = false});
  const auto s = workflow::summarize(c, r, true);
  // Compatible with 9.4 +- 1.3 at two standard deviations.
  EXPECT_NEAR(s.get("g2_EE").value, 9.4, 2.0 * 1.3);
}

TEST(CorrelationE, Examples) {
  EXPECT_DOUBLE_EQ(correlation_E(table(50, 0, 0, 50)).value, 1.0);
  const auto zero = correlation_E(table(25, 25, 25, 25));
  EXPECT_DOUBLE_EQ(zero.value, 0.0);
  EXPECT_NEAR(zero.sigma, 1.0 / std::sqrt(100.0), 1e-15);
  EXPECT_THROW(correlation_E(table(0, 0, 0, 0)), ValidationError);
}

TEST(CorrelationE, BootstrapAgreesWithPropagation) {
  const auto t = table(300, 120, 110, 280);
  const auto e = correlation_E(t);
  const auto b = bootstrap_E(t, 4000, 7);
  EXPECT_NEAR(b.value, e.value, 3.0 * e.sigma / std::sqrt(4000.0) + 1e-3);
  EXPECT_NEAR(b.sigma, e.sigma, 0.1 * e.sigma);
}

TEST(CoincidenceTable, Invariants) {
  auto t = table(5, 1, 1, 5);
  EXPECT_NO_THROW(t.validate());
  t.n[0][0] = -1;
  EXPECT_THROW(t.validate(), ValidationError);
  t = table(5, 1, 1, 5);
  t.write_singles[0] = 2;
  EXPECT_THROW(t.validate(), ValidationError);
}

TEST(ChshS, Examples) {
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(chsh_S({value(r), value(-r), value(r), value(r)}).value, 2.0 * std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(chsh_S({value(0.5), value(0.5), value(0.5), value(0.5)}).value, 1.0);
  const auto s = chsh_S({value(r, 0.1), value(-r, 0.1), value(r, 0.1), value(r, 0.1)});
  EXPECT_NEAR(s.sigma, 0.2, 1e-15);
}

TEST(ChshS, DefaultBellConfigExact) {
  const auto base = load_config(kConfigDir + "/bell.yaml");
  const auto cal = workflow::calibrate_chsh(base, 12, false, base.trials);
  const auto c = workflow::with_chsh(base, cal.fit.settings);
  const auto r = protocol::run_experiment(c, {.sample = false});
  const auto s = workflow::summarize(c, r, true);
  // Calibrated settings; within one reported standard deviation of 2.32.
  EXPECT_NEAR(s.get("S").value, 2.32, 0.08);
}

TEST(Visibility, MaxAbsolute) {
  const auto v = visibility_max({value(0.2, 0.01), value(-0.7, 0.02), value(0.5, 0.03)});
  EXPECT_DOUBLE_EQ(v.value, 0.7);
  EXPECT_DOUBLE_EQ(v.sigma, 0.02);
  EXPECT_THROW(visibility_max({}), ValidationError);
}

TEST(WitnessR, Examples) {
  const auto r = witness_R(value(0.82, 0.04), value(9.4, 1.3), value(5.0, 0.8));
  EXPECT_NEAR(r.value, 0.74, 0.005);
  EXPECT_NEAR(r.value, 0.72, 0.06);
  EXPECT_DOUBLE_EQ(witness_R(value(0.0), value(3.0), value(5.0)).value, 2.5);
  EXPECT_DOUBLE_EQ(witness_R(value(1.0), value(1.0), value(1.0)).value, 0.0);
  EXPECT_TRUE(entangled(value(0.72, 0.06), 3.0));
  EXPECT_FALSE(entangled(value(0.9, 0.06), 3.0));
  EXPECT_THROW(witness_R(value(1.2), value(2.0), value(2.0)), ValidationError);
}

TEST(SidebandAsymmetry, Examples) {
  EXPECT_NEAR(nth_from_asymmetry(value(1.0, 0.01), value(0.0476, 0.001)).value, 0.05, 1e-4);
  EXPECT_DOUBLE_EQ(nth_from_asymmetry(value(1.0, 0.01), value(0.0)).value, 0.0);
  EXPECT_TRUE(nth_from_asymmetry(value(1.0), value(1.0)).flagged);
  const auto n = nth_from_counts(21000, 1000);
  EXPECT_NEAR(n.value, 0.05, 1e-12);
  EXPECT_GT(n.sigma, 0.0);
}

TEST(SidebandAsymmetry, RecoversConfiguredSchedule) {
  const auto c = load_config(kConfigDir + "/double_cross.yaml");
  const auto runs = workflow::simulate_sideband_asymmetry(c, 20000000);
  ASSERT_EQ(runs.size(), 4u);
  const double expected[] = {0.022, 0.040, 0.066, 0.095};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(runs[i].n_th, expected[i], 1e-12);
    EXPECT_NEAR(runs[i].estimate.value, expected[i], 3.0 * runs[i].estimate.sigma) << i;
  }
}

TEST(FitExponential, SyntheticDecay) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> t, y, s;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(i * 0.25e-6);
    y.push_back(std::exp(-t.back() / 2.2e-6) * (1.0 + noise(rng)));
    s.push_back(0.01 * std::exp(-t.back() / 2.2e-6));
  }
  const auto r = fit_exponential(t, y, s);
  EXPECT_FALSE(r.flagged);
  EXPECT_NEAR(r.value, 2.2e-6, 3.0 * r.sigma);
  EXPECT_LT(r.sigma, 0.05 * 2.2e-6);
}

TEST(FitExponential, DegenerateAndClosedForm) {
  const std::vector<double> t = {1e-6, 2e-6, 3e-6, 4e-6, 5e-6};
  EXPECT_TRUE(fit_exponential(t, {0.3, 0.3, 0.3, 0.3, 0.3}).flagged);

  const auto two = fit_exponential({1e-6, 3e-6}, {std::exp(-1.0 / 2.2), std::exp(-3.0 / 2.2)});
  EXPECT_NEAR(two.value, 2.2e-6, 1e-18);
  EXPECT_THROW(fit_exponential({1e-6, 2e-6, 3e-6}, {1, 0.5, 0.25}), ValidationError);
}

TEST(Calibration, RecoversPhaseZero) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> phi;
  std::vector<AnalysisResult> e0, e1;
  for (int i = 0; i < 12; ++i) {
    phi.push_back(2.0 * kPi * i / 12);
    e0.push_back(value(ideal_e(0.8, kPi, phi.back(), 0.0) + noise(rng), 0.05));
    e1.push_back(value(ideal_e(0.8, kPi, phi.back(), kPi / 2.0) + noise(rng), 0.05));
  }
  const auto cal = fit_sinusoid_and_choose_phases(phi, e0, e1);
  EXPECT_LT(circular_distance(cal.phi_0, kPi, 2.0 * kPi), kPi / 50.0);
  EXPECT_NEAR(cal.amplitude, 0.8, 0.05);
}

TEST(Calibration, IdealCurvesGiveQuarterOffsets) {
  for (double phi0 : {0.3, 1.0 * kPi, 5.5}) {
    std::vector<double> phi;
    std::vector<AnalysisResult> e0, e1;
    for (int i = 0; i < 12; ++i) {
      phi.push_back(2.0 * kPi * i / 12);
      e0.push_back(value(ideal_e(0.9, phi0, phi.back(), 0.0), 0.01));
      e1.push_back(value(ideal_e(0.9, phi0, phi.back(), kPi / 2.0), 0.01));
    }
    const auto cal = fit_sinusoid_and_choose_phases(phi, e0, e1);
    EXPECT_LT(circular_distance(cal.phi_0, phi0, 2.0 * kPi), 1e-9);
    EXPECT_NEAR(cal.expected_S, 2.0 * std::sqrt(2.0) * 0.9, 1e-9);
    EXPECT_NEAR(cal.settings.phi_r[0], 0.0, 1e-12);
    EXPECT_NEAR(cal.settings.phi_r[1], kPi / 2.0, 1e-12);
    for (double w : cal.settings.phi_w) {
      const double d = std::min(circular_distance(w, phi0 - kPi / 4.0, kPi), circular_distance(w, phi0 + kPi / 4.0, kPi));
      EXPECT_LT(d, 1e-6) << phi0;
    }
    EXPECT_NEAR(cal.epsilon[0], 0.0, 1e-6);
    EXPECT_NEAR(cal.epsilon[1], 0.0, 1e-6);
  }
}

TEST(Calibration, ImperfectCurvesReportOffsets) {
  // Unequal amplitudes and a read-phase error move the optimum away from phi_0 +- pi/4.
  std::vector<double> phi;
  std::vector<AnalysisResult> e0, e1;
  for (int i = 0; i < 12; ++i) {
    phi.push_back(2.0 * kPi * i / 12);
    e0.push_back(value(0.03 + ideal_e(0.80, 2.0, phi.back(), 0.0), 0.01));
    e1.push_back(value(-0.02 + ideal_e(0.65, 2.0, phi.back(), kPi / 2.0 + kPi / 12.0), 0.01));
  }
  const auto cal = fit_sinusoid_and_choose_phases(phi, e0, e1);
  const double worst = std::max(std::abs(cal.epsilon[0]), std::abs(cal.epsilon[1]));
  EXPECT_GT(worst, kPi / 100.0);
  EXPECT_LT(worst, kPi / 8.0);
  // The chosen pair beats the nominal phi_0 +- pi/4 pair on the fitted curves.
  const auto s_of = [&](double w0, double w1) {
    return std::abs(cal.curve0(w0) - cal.curve0(w1) + cal.curve1(w0) + cal.curve1(w1));
  };
  EXPECT_GE(cal.expected_S + 1e-12, s_of(cal.phi_0 - kPi / 4.0, cal.phi_0 + kPi / 4.0));
  EXPECT_NEAR(cal.expected_S, s_of(cal.settings.phi_w[0], cal.settings.phi_w[1]), 1e-9);
}

TEST(Calibration, DegenerateFitRejected) {
  std::vector<double> phi;
  std::vector<AnalysisResult> flat;
  for (int i = 0; i < 12; ++i) {
    phi.push_back(2.0 * kPi * i / 12);
    flat.push_back(value(i % 2 ? 0.1 : -0.1, 0.01));
  }
  EXPECT_THROW(fit_sinusoid_and_choose_phases(phi, flat, flat), NumericalError);
  EXPECT_THROW(fit_sinusoid({0, 1, 2}, {0, 1, 2}), ValidationError);
}

TEST(AnalysisProperty, BoundsOnRandomTables) {
  SplitMix64 rng(21);
  for (int i = 0; i < 500; ++i) {
    std::array<AnalysisResult, 4> e;
    for (auto& x : e) {
      x = correlation_E(table(1 + 100 * rng.uniform(), 100 * rng.uniform(), 100 * rng.uniform(), 100 * rng.uniform()));
      EXPECT_LE(std::abs(x.value), 1.0);
      EXPECT_GE(x.sigma, 0.0);
    }
    EXPECT_LE(chsh_S(e).value, 4.0);
  }
}

TEST(AnalysisProperty, EnginesRespectTsirelson) {
  SplitMix64 rng(22);
  auto base = load_config(kConfigDir + "/bell.yaml");
  for (int i = 0; i < 12; ++i) {
    auto c = base;
    for (auto& p : c.pulses) p.scattering_probability = (is_write(p.role) ? 0.01 : 0.04) * rng.uniform() + 1e-4;
    if (i % 2) c = protocol::noiseless(c);
    ChshSettings settings;
    for (auto& w : settings.phi_w) w = 2.0 * kPi * rng.uniform();
    for (auto& r : settings.phi_r) r = 2.0 * kPi * rng.uniform();
    if (i == 0) settings = default_chsh_settings(c.phases.phi_off());
    c.chsh = settings;
    const auto r = protocol::run_experiment(c, {.sample = false});
    const auto s = workflow::summarize(c, r, true);
    EXPECT_LE(s.get("S").value, 2.0 * std::sqrt(2.0) + 1e-9) << i;
  }
}

TEST(AnalysisProperty, IndependentStreamsGiveUnitG2) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution w(2e-3), r(3e-3);
    double nw = 0, nr = 0, nc = 0;
    const double trials = 1e6;
    for (int i = 0; i < 1000000; ++i) {
      const bool a = w(rng), b = r(rng);
      nw += a;
      nr += b;
      nc += a && b;
    }
    const auto g = g2_cross(nw, nr, nc, trials);
    EXPECT_NEAR(g.value, 1.0, 3.0 * g.sigma) << seed;
  }
}

// Sources without write/read entanglement stay on the classical side of the witness.
TEST(AnalysisProperty, SeparableSourcesRespectWitnessBound) {
  const auto base = load_config(kConfigDir + "/time_bin.yaml");
  std::vector<ExperimentConfig> sources;
  auto distinguishable = base;
  distinguishable.noise.interferometer_visibility = 0.0;
  sources.push_back(distinguishable);
  auto dephased = base;
  dephased.noise.write_phase_jitter_fwhm = 40.0;
  sources.push_back(dephased);
  for (const auto& c : sources) {
    const auto r = protocol::run_experiment(c, {.sample = false});
    const auto s = workflow::summarize(c, r, true);
    ASSERT_TRUE(s.has("R"));
    EXPECT_GE(s.get("R").value + 3.0 * s.get("R").sigma, 1.0);
  }
}

TEST(AnalysisProperty, ExactEstimatesMatchSampled) {
  auto c = load_config(kConfigDir + "/bell.yaml");
  for (auto& p : c.pulses) p.scattering_probability = is_write(p.role) ? 0.02 : 0.04;
  const auto r = protocol::run_experiment(c, {.trials = 1000000});
  const auto exact = workflow::summarize(c, r, true);
  const auto sampled = workflow::summarize(c, r, false);
  for (std::size_t i = 0; i < exact.rows.size(); ++i)
    EXPECT_NEAR(sampled.rows[i].e.value, exact.rows[i].e.value, 3.0 * sampled.rows[i].e.sigma) << i;
  EXPECT_NEAR(sampled.get("S").value, exact.get("S").value, 3.0 * sampled.get("S").sigma);
  EXPECT_NEAR(sampled.get("g2_overlap").value, exact.get("g2_overlap").value, 3.0 * sampled.get("g2_overlap").sigma);
}

TEST(AnalysisProperty, SinusoidErrorsAreCalibrated) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.06);
  double z2 = 0.0, worst = 0.0;
  const int realizations = 100;
  for (int k = 0; k < realizations; ++k) {
    std::vector<double> phi, e, s;
    for (int i = 0; i < 12; ++i) {
      phi.push_back(2.0 * kPi * i / 12);
      e.push_back(ideal_e(0.75, 1.3, phi.back(), 0.0) + noise(rng));
      s.push_back(0.06);
    }
    const auto fit = fit_sinusoid(phi, e, s);
    const double z = std::remainder(fit.falling_zero() - 1.3, 2.0 * kPi) / fit.falling_zero_sigma();
    z2 += z * z;
    worst = std::max(worst, std::abs(z));
  }
  EXPECT_NEAR(z2 / realizations, 1.0, 0.4);
  EXPECT_LT(worst, 4.0);
}
