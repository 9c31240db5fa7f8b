#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "phonon/analysis.hpp"
#include "phonon/config.hpp"
#include "phonon/fock.hpp"
#include "phonon/protocol.hpp"

using namespace phonon;
using namespace phonon::protocol;
using phonon::fock::FockState;

namespace {

const std::string kConfigDir = PHONON_CONFIG_DIR;

ExperimentConfig bell() { return load_config(kConfigDir + "/bell.yaml"); }

ExperimentConfig with_p(ExperimentConfig c, double p_w, double p_r) {
  for (auto& pulse : c.pulses) pulse.scattering_probability = is_write(pulse.role) ? p_w : p_r;
  return c;
}

// Left and right detector noise made identical.
ExperimentConfig symmetric(ExperimentConfig c) {
  c.noise.filter_pulse_efficiency = {0.65, 0.65};
  c.noise.leakage_prob = {{{3e-7, 3e-7}, {2e-6, 2e-6}}};
  c.noise.splitting_asymmetry = 0.0;
  return c;
}

void run_ops(FockState& s, const Circuit& c) {
  for (const auto& op : c.operations()) s.apply(op);
}

// Nearly pure |1> in `mode`, alongside vacuum modes `others`.
FockState single_quantum(const std::string& mode, const std::vector<std::string>& others, int cutoff) {
  std::vector<std::string> modes = {mode, "h"};
  modes.insert(modes.end(), others.begin(), others.end());
  auto s = FockState::vacuum(modes, cutoff);
  s.squeeze(mode, "h", 1e-10, 0.0);
  s.project_click("h");
  s.normalize();
  s.trace_out("h");
  return s;
}

std::complex<double> coherence(const FockState& s, const std::string& a, const std::string& b) {
  // rho(|1_a 0_b>, |0_a 1_b>) of the reduced two-mode state.
  const auto r = s.reduced({a, b});
  const std::uint8_t row[] = {1, 0}, col[] = {0, 1};
  return r.rho()(r.basis().find(row), r.basis().find(col));
}

std::uint32_t bit(const ProtocolCircuit& pc, Window w, std::size_t d) { return 1u << pc.find(w, d); }

}  // namespace

TEST(WriteStage, StokesClickProbability) {
  auto c = noiseless(with_p(bell(), 0.002, 0.0));
  Circuit circuit;
  ThermalTracker thermal;
  append_write_stage(circuit, c, 0.0, thermal);
  const auto d = make_gaussian_engine()->evaluate(circuit, {{"E", {kWriteEarly}}});
  EXPECT_NEAR(d.all_click(1), 0.002, 0.002 * 0.002 * 1.01);
}

TEST(WriteStage, ZeroInteractionKeepsVacuum) {
  auto c = noiseless(with_p(bell(), 0.0, 0.0));
  Circuit circuit;
  ThermalTracker thermal;
  append_write_stage(circuit, c, 0.7, thermal);
  const auto d = make_fock_engine(3)->evaluate(
      circuit, {{"oE", {kWriteEarly}}, {"oL", {kWriteLate}}, {"mE", {kMechEarly}}, {"mL", {kMechLate}}});
  EXPECT_DOUBLE_EQ(d.probability(0), 1.0);
}

TEST(WriteStage, HeraldedPhononCoherence) {
  const double p = 0.002;
  auto c = noiseless(with_p(bell(), p, 0.0));
  c.phases.set_phi_off(0.3);
  ProtocolCircuit pc;
  ThermalTracker thermal;
  append_write_stage(pc.circuit, c, 0.5, thermal);
  append_interferometer(pc, ProcessRole::Write, InterferometerModel::from_config(c), 0.0,
                        DetectionChain::from_noise(c.noise), false);
  auto s = FockState::vacuum({}, 4);
  run_ops(s, pc.circuit);

  std::complex<double> rho_el[2];
  for (std::size_t herald : {0u, 1u}) {
    auto h = s;
    h.project_click(pc.detectors.at(pc.find(Window::WriteOverlap, herald)).modes.front());
    h.normalize();
    rho_el[herald] = coherence(h, kMechEarly, kMechLate);
    EXPECT_NEAR(std::abs(rho_el[herald]), 0.5, 3.0 * p);
  }
  // Heralds on the two detectors leave opposite relative phases; the phase follows phi_w + phi_off.
  EXPECT_NEAR(std::abs(std::remainder(std::arg(rho_el[1]) - std::arg(rho_el[0]), 2.0 * kPi)), kPi, 1e-9);
  EXPECT_NEAR(std::abs(std::remainder(std::arg(rho_el[0]), kPi)), 0.8, 1e-9);
}

TEST(ReadStage, SinglePhononReadout) {
  auto c = noiseless(with_p(bell(), 0.0, 0.007));
  c.waveguide.retrieval_efficiency = 1.0;
  Circuit circuit;
  ThermalTracker thermal;
  append_storage(circuit, c, thermal);
  append_read_stage(circuit, c, 0.0, thermal);
  auto s = single_quantum(kMechEarly, {kMechLate}, 3);
  run_ops(s, circuit);
  const double expected = 0.007 * std::exp(-126e-9 / 2.2e-6);
  EXPECT_NEAR(s.joint_probability({{kReadEarly, 1}}), expected, 1e-12);
  EXPECT_NEAR(expected, 0.0066, 5e-5);
}

TEST(ReadStage, ZeroInteractionLeavesReadModesEmpty) {
  auto c = noiseless(with_p(bell(), 0.0, 0.0));
  Circuit circuit;
  ThermalTracker thermal;
  append_read_stage(circuit, c, 0.0, thermal);
  auto s = single_quantum(kMechEarly, {kMechLate}, 3);
  run_ops(s, circuit);
  EXPECT_EQ(s.mean_photon_number(kReadEarly), 0.0);
  EXPECT_EQ(s.mean_photon_number(kReadLate), 0.0);
}

TEST(ReadStage, ThermalPhononClicks) {
  auto c = noiseless(with_p(bell(), 0.0, 0.007));
  c.noise.thermal_schedule = {{PulseRole::ReadEarly, 0.066}};
  Circuit circuit;
  circuit.add_mode(kMechEarly).add_mode(kMechLate);
  ThermalTracker thermal(c.thermal_injection_epsilon);
  append_read_stage(circuit, c, 0.0, thermal);
  const auto d = make_gaussian_engine()->evaluate(circuit, {{"rE", {kReadEarly}}});
  EXPECT_NEAR(d.all_click(1), 4.6e-4, 0.05e-4);
  // Thermal light through the splitter: 1 - 1/(1 + p_r n).
  EXPECT_NEAR(d.all_click(1), 1.0 - 1.0 / (1.0 + 0.007 * 0.066), 1e-12);
}

TEST(Interferometer, EarlyPhotonSplitsOverWindows) {
  auto c = noiseless(with_p(bell(), 0.0, 0.0));
  ProtocolCircuit pc;
  append_interferometer(pc, ProcessRole::Write, InterferometerModel::from_config(c), 0.0,
                        DetectionChain::from_noise(c.noise), true);
  auto s = single_quantum(kWriteEarly, {kWriteLate}, 2);
  run_ops(s, pc.circuit);
  const auto d = s.click_distribution(pc.detectors);
  EXPECT_NEAR(d.all_click(bit(pc, Window::WriteOverlap, 0)), 0.25, 1e-9);
  EXPECT_NEAR(d.all_click(bit(pc, Window::WriteOverlap, 1)), 0.25, 1e-9);
  EXPECT_NEAR(d.all_click(bit(pc, Window::WriteEarlyDirect, 0)) + d.all_click(bit(pc, Window::WriteEarlyDirect, 1)),
              0.5, 1e-9);
  EXPECT_NEAR(d.all_click(bit(pc, Window::WriteLateDelayed, 0)), 0.0, 1e-12);
}

TEST(Interferometer, ZeroTotalPhaseGivesSameDetectorCoincidences) {
  const double p_w = 0.002, p_r = 0.007;
  auto c = noiseless(with_p(bell(), p_w, p_r));
  c.phases.set_phi_off(0.4);
  const auto pc = build_circuit(c, -0.8, 0.0);
  const auto d = make_gaussian_engine()->evaluate(pc.circuit, pc.detectors);
  const auto w1 = bit(pc, Window::WriteOverlap, 0), w2 = bit(pc, Window::WriteOverlap, 1);
  const auto r1 = bit(pc, Window::ReadOverlap, 0), r2 = bit(pc, Window::ReadOverlap, 1);
  const double same = d.all_click(w1 | r1) + d.all_click(w2 | r2);
  const double cross = d.all_click(w1 | r2) + d.all_click(w2 | r1);
  EXPECT_GT(same, 1e-6);
  // Cross coincidences come only from double excitations.
  EXPECT_LT(cross / same, 5.0 * (p_w + p_r));
}

TEST(Interferometer, NoVisibilityRemovesPhaseDependence) {
  auto c = bell();
  c.noise.interferometer_visibility = 0.0;
  const auto engine = make_gaussian_engine();
  const auto ref = [&] {
    const auto pc = build_circuit(c, 0.0, 0.0);
    return engine->evaluate(pc.circuit, pc.detectors);
  }();
  for (double phi : {0.5, 1.5, 3.0}) {
    const auto pc = build_circuit(c, phi, 0.3 * phi);
    const auto d = engine->evaluate(pc.circuit, pc.detectors);
    for (std::size_t k = 0; k < d.probabilities().size(); ++k)
      EXPECT_NEAR(d.probabilities()[k], ref.probabilities()[k], 1e-15);
  }
  EXPECT_TRUE(PhaseResponse::compute(c, *engine).phase_independent());
}

TEST(Detection, PerfectChainOnVacuum) {
  const auto c = noiseless(with_p(bell(), 0.0, 0.0));
  const auto r = run_experiment(c, {.sample = true, .trials = 100000});
  EXPECT_NEAR(r.settings[0].exact.probability(0), 1.0, 1e-12);
  EXPECT_EQ(r.settings[0].sampled.count(0), 100000u);
}

TEST(Detection, ReadLeakageCounts) {
  auto c = noiseless(with_p(bell(), 0.0, 0.0));
  c.noise.leakage_prob = {{{0.0, 0.0}, {0.0, 2.6e-6}}};
  const auto r = run_experiment(c, {.sample = true, .trials = 10000000});
  const auto mask = r.detector_bit(Window::ReadOverlap, 1);
  EXPECT_NEAR(r.settings[0].exact.all_click(mask) * 1e7, 26.0, 1e-9);
  EXPECT_NEAR(static_cast<double>(r.settings[0].sampled.all_click(mask)), 26.0, 3.0 * std::sqrt(26.0));
}

TEST(Detection, SaturatedDarkCounts) {
  auto c = with_p(bell(), 0.001, 0.005);
  c.noise.dark_count_prob = 1.0;
  const auto r = run_experiment(c, {.sample = false, .build = {.all_windows = true}});
  const auto& d = r.settings[0].exact;
  EXPECT_NEAR(d.probability(static_cast<std::uint32_t>(d.probabilities().size() - 1)), 1.0, 1e-12);
}

// The Fock truncation deficit lands on the all-click pattern, so the cutoff must keep it well below
// the coincidence probability.
TEST(RunExperiment, NoiselessCorrelationIsCosine) {
  for (const EngineSettings engine : {EngineSettings{EngineKind::Gaussian, 4}, EngineSettings{EngineKind::Fock, 5}}) {
    auto c = noiseless(with_p(bell(), 1e-5, 0.01));
    c.engine = engine;
    const auto r = run_experiment(c, {.sample = false});
    ASSERT_EQ(r.settings.size(), 4u);
    for (std::size_t i = 0; i < r.settings.size(); ++i) {
      const auto e = analysis::correlation_E(analysis::coincidence_table(r, i, Window::WriteOverlap,
                                                                         Window::ReadOverlap, true, 1e9));
      EXPECT_NEAR(e.value, std::cos(r.settings[i].total_phase), 1e-4) << r.engine << " " << i;
    }
  }
}

TEST(RunExperiment, NoWritesNoHeralds) {
  auto c = with_p(bell(), 0.0, 0.007);
  c.noise.dark_count_prob = 0.0;
  c.noise.leakage_prob = {{{0.0, 0.0}, {0.0, 0.0}}};
  c.noise.thermal_schedule.clear();
  const auto r = run_experiment(c, {.sample = true, .trials = 1000000});
  const auto w = r.window_mask(Window::WriteOverlap);
  for (const auto& s : r.settings) {
    EXPECT_NEAR(s.exact.none_click(w), 1.0, 1e-12);
    for (std::uint32_t k = 0; k < s.sampled.counts.size(); ++k) {
      if (k & w) {
        EXPECT_EQ(s.sampled.counts[k], 0u);
      }
    }
  }
}

TEST(RunExperiment, DeterministicForSeed) {
  auto c = bell();
  const auto a = run_experiment(c, {.trials = 2000000, .workers = 1});
  const auto b = run_experiment(c, {.trials = 2000000, .workers = 3});
  for (std::size_t i = 0; i < a.settings.size(); ++i) EXPECT_EQ(a.settings[i].sampled.counts, b.settings[i].sampled.counts);
  c.seed += 1;
  const auto d = run_experiment(c, {.trials = 2000000, .workers = 1});
  EXPECT_NE(a.settings[0].sampled.counts, d.settings[0].sampled.counts);
}

TEST(RateBudget, BellConfigRate) {
  const auto b = rate_budget(bell());
  EXPECT_GT(b.coincidences_per_hour, 10.0);
  EXPECT_LT(b.coincidences_per_hour, 90.0);
  EXPECT_FALSE(b.assumptions.empty());
}

TEST(RateBudget, LosslessUnitProbabilityHitsRepetitionRate) {
  auto c = noiseless(with_p(bell(), 1.0, 1.0));
  c.waveguide.t1 = 1e9;
  c.waveguide.retrieval_efficiency = 1.0;
  const auto b = rate_budget(c);
  EXPECT_NEAR(b.heralds_per_hour, 3600.0 / c.repetition_period, 1e-6);
  EXPECT_LE(b.coincidences_per_hour, b.heralds_per_hour);
}

TEST(RateBudget, LinearInWriteProbability) {
  const auto a = rate_budget(with_p(bell(), 0.001, 0.007));
  const auto b = rate_budget(with_p(bell(), 0.002, 0.007));
  EXPECT_NEAR(b.heralds_per_hour, 2.0 * a.heralds_per_hour, 1e-9 * a.heralds_per_hour);
}

TEST(ProtocolProperty, HeraldSymmetry) {
  const auto c = symmetric(bell());
  const auto r = run_experiment(c, {.trials = 20000000});
  const auto h1 = r.detector_bit(Window::WriteOverlap, 0), h2 = r.detector_bit(Window::WriteOverlap, 1);
  for (const auto& s : r.settings) {
    EXPECT_NEAR(s.exact.all_click(h1), s.exact.all_click(h2), 1e-15);
    const double n1 = s.sampled.all_click(h1), n2 = s.sampled.all_click(h2);
    EXPECT_LT(std::abs(n1 - n2), 3.0 * std::sqrt(n1 + n2));
  }
}

TEST(ProtocolProperty, HeraldSignFlip) {
  const auto c = symmetric(bell());
  const auto engine = make_gaussian_engine();
  const auto response = PhaseResponse::compute(c, *engine);
  const auto pc = build_circuit(c, 0.0, 0.0);
  const auto w1 = bit(pc, Window::WriteOverlap, 0), w2 = bit(pc, Window::WriteOverlap, 1);
  for (double phi : {0.0, 0.4, 1.9, 4.0}) {
    const auto d = response.at(phi);
    const auto f = response.at(phi + kPi);
    for (std::size_t k : {0u, 1u}) {
      const auto rk = bit(pc, Window::ReadOverlap, k);
      EXPECT_NEAR(d.all_click(w1 | rk), f.all_click(w2 | rk), 1e-15) << phi;
    }
  }
}

TEST(ProtocolProperty, SampledMatchesExact) {
  auto c = with_p(bell(), 0.02, 0.04);
  const auto r = run_experiment(c, {.trials = 1000000});
  for (const auto& s : r.settings) {
    for (std::size_t k = 0; k < s.exact.probabilities().size(); ++k) {
      const double expected = 1e6 * s.exact.probabilities()[k];
      const double sd = std::sqrt(expected * (1.0 - s.exact.probabilities()[k]));
      EXPECT_LE(std::abs(static_cast<double>(s.sampled.counts[k]) - expected), 3.0 * sd + 1.0) << k;
    }
  }
}

TEST(ProtocolProperty, StatisticsDependOnTotalPhaseOnly) {
  const auto c0 = noiseless(with_p(bell(), 0.01, 0.01));
  const auto engine = make_gaussian_engine();
  SplitMix64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const double total = 2.0 * kPi * rng.uniform();
    std::vector<double> ref;
    for (int variant = 0; variant < 3; ++variant) {
      auto c = c0;
      const double off = 2.0 * kPi * rng.uniform();
      const double phi_r = 2.0 * kPi * rng.uniform();
      c.phases.set_phi_off(off);
      const auto pc = build_circuit(c, total - phi_r - 2.0 * off, phi_r);
      const auto d = engine->evaluate(pc.circuit, pc.detectors);
      if (ref.empty()) ref = d.probabilities();
      for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(d.probabilities()[k], ref[k], 1e-14);
    }
  }
}

TEST(ProtocolProperty, FourierTableMatchesDirectEvaluation) {
  for (auto kind : {EngineKind::Gaussian, EngineKind::Fock}) {
    auto c = with_p(bell(), 0.002, 0.007);
    c.engine = {kind, 3};
    const auto engine = make_engine(c.engine);
    const auto response = PhaseResponse::compute(c, *engine);
    for (double phi : {0.3, 2.2, 5.1}) {
      const auto pc = build_circuit(c, phi - 2.0 * c.phases.phi_off(), 0.0);
      const auto d = engine->evaluate(pc.circuit, pc.detectors);
      const auto t = response.at(phi);
      for (std::size_t k = 0; k < d.probabilities().size(); ++k)
        EXPECT_NEAR(t.probabilities()[k], d.probabilities()[k], 1e-14);
    }
  }
}
