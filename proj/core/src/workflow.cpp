#include "phonon/workflow.hpp"

#include <cmath>
#include <random>

#include "phonon/errors.hpp"

namespace phonon::workflow {

using analysis::AnalysisResult;
using protocol::Window;

namespace {

double expected_trials(const ExperimentConfig& config, const protocol::ExperimentResult& result, bool exact) {
  if (exact || result.settings.empty() || result.settings.front().sampled.counts.empty())
    return static_cast<double>(config.trials);
  return static_cast<double>(result.settings.front().sampled.trials);
}

// Sums window counts over all settings.
analysis::WindowCounts pooled_counts(const protocol::ExperimentResult& result, Window w, Window r, bool exact,
                                     double trials) {
  analysis::WindowCounts total;
  for (std::size_t i = 0; i < result.settings.size(); ++i) {
    const auto c = analysis::window_counts(result, i, w, r, exact, trials);
    total.write += c.write;
    total.read += c.read;
    total.coincidences += c.coincidences;
    total.trials += c.trials;
  }
  return total;
}

}  // namespace

std::vector<SidebandRun> simulate_sideband_asymmetry(const ExperimentConfig& config, std::uint64_t trials) {
  if (trials == 0) throw ValidationError("sideband simulation needs trials >= 1");
  const auto engine = protocol::make_engine(config.engine);
  const protocol::DetectionChain chain = protocol::DetectionChain::from_noise(config.noise);
  const double dark = config.noise.dark_count_prob;

  std::vector<SidebandRun> out;
  for (std::size_t i = 0; i < kPulseRoles.size(); ++i) {
    const PulseRole role = kPulseRoles[i];
    SidebandRun run;
    run.role = role;
    run.n_th = config.noise.n_th_at(role);
    run.probe_p = config.scattering_probability(role);
    run.trials = trials;
    if (!(run.probe_p > 0.0)) throw ValidationError("sideband probe needs a pulse with p > 0 at " + std::string(to_string(role)));

    const Detector detector{"probe", {"o"}, chain.efficiency(0), dark};
    const auto thermal = [&](Circuit& c) {
      c.add_mode("o").add_mode("m");
      c.thermal_noise("m", run.n_th, config.thermal_injection_epsilon);
    };
    Circuit stokes;
    thermal(stokes);
    // Mean Stokes photon number sinh^2 r (n + 1) = p (n + 1).
    stokes.squeeze("o", "m", run.probe_p / (1.0 + run.probe_p), 0.0);
    Circuit anti;
    thermal(anti);
    anti.beam_splitter("o", "m", 1.0 - run.probe_p, 0.0);
    run.stokes_probability = engine->evaluate(stokes, {detector}).probability(1);
    run.anti_stokes_probability = engine->evaluate(anti, {detector}).probability(1);

    SplitMix64 rng = SplitMix64::for_trial(config.seed, i, 0x5b);
    run.stokes_counts = static_cast<double>(std::binomial_distribution<std::uint64_t>(trials, run.stokes_probability)(rng));
    run.anti_stokes_counts =
        static_cast<double>(std::binomial_distribution<std::uint64_t>(trials, run.anti_stokes_probability)(rng));

    const double background = dark * static_cast<double>(trials);
    AnalysisResult s, a;
    s.value = run.stokes_counts - background;
    s.sigma = std::sqrt(run.stokes_counts);
    a.value = run.anti_stokes_counts - background;
    a.sigma = std::sqrt(run.anti_stokes_counts);
    run.estimate = analysis::nth_from_asymmetry(s, a);
    run.estimate.method += "-background-subtracted";
    out.push_back(run);
  }
  return out;
}

ExperimentConfig with_chsh(const ExperimentConfig& config, const ChshSettings& settings) {
  ExperimentConfig c = config;
  c.kind = ExperimentKind::BellTest;
  c.chsh = settings;
  c.sweep.points.clear();
  return c;
}

ChshCalibrationRun calibrate_chsh(const ExperimentConfig& config, int points, bool sample, std::uint64_t trials) {
  if (points < 6) throw ValidationError("calibration sweep needs >= 6 points");
  ExperimentConfig sweep = config;
  sweep.kind = ExperimentKind::TimeBinEntanglement;
  sweep.chsh.reset();
  sweep.sweep.points.clear();
  ChshCalibrationRun run;
  for (const double phi_r : {0.0, kPi / 2.0})
    for (int i = 0; i < points; ++i) {
      const double phi_w = 2.0 * kPi * i / points;
      sweep.sweep.points.emplace_back(phi_w, phi_r);
      if (phi_r == 0.0) run.phi_w.push_back(phi_w);
    }

  protocol::RunOptions options;
  options.sample = sample;
  options.trials = trials;
  const auto result = protocol::run_experiment(sweep, options);
  const double n = static_cast<double>(trials > 0 ? trials : sweep.trials);
  for (std::size_t i = 0; i < result.settings.size(); ++i) {
    const auto e = analysis::correlation_E(
        analysis::coincidence_table(result, i, Window::WriteOverlap, Window::ReadOverlap, !sample, n));
    (i < static_cast<std::size_t>(points) ? run.e0 : run.e1).push_back(e);
  }
  run.fit = analysis::fit_sinusoid_and_choose_phases(run.phi_w, run.e0, run.e1, 0.0, kPi / 2.0);
  return run;
}

const AnalysisResult& Summary::get(const std::string& name) const {
  for (const auto& [key, value] : values)
    if (key == name) return value;
  throw ValidationError("summary has no value '" + name + "'");
}

bool Summary::has(const std::string& name) const {
  for (const auto& [key, value] : values)
    if (key == name) return true;
  return false;
}

Summary summarize(const ExperimentConfig& config, const protocol::ExperimentResult& result, bool exact) {
  Summary s;
  const double trials = expected_trials(config, result, exact);

  if (config.kind == ExperimentKind::DoubleCrossCorrelation) {
    const std::array<std::pair<const char*, Window>, 2> write = {{{"E", Window::WriteEarlyDirect}, {"L", Window::WriteOverlap}}};
    const std::array<std::pair<const char*, Window>, 2> read = {{{"E", Window::ReadEarlyDirect}, {"L", Window::ReadOverlap}}};
    for (const auto& [wn, w] : write)
      for (const auto& [rn, r] : read)
        s.add(std::string("g2_") + wn + rn, analysis::g2_cross(pooled_counts(result, w, r, exact, trials)));
    return s;
  }

  // Interfering runs: E per setting, the overlap-window g2 of the same runs, and derived quantities.
  std::vector<AnalysisResult> es;
  for (std::size_t i = 0; i < result.settings.size(); ++i) {
    Summary::Row row;
    row.phi_w = result.settings[i].phi_w;
    row.phi_r = result.settings[i].phi_r;
    row.total_phase = result.settings[i].total_phase;
    const auto table = analysis::coincidence_table(result, i, Window::WriteOverlap, Window::ReadOverlap, exact, trials);
    const auto exact_table =
        analysis::coincidence_table(result, i, Window::WriteOverlap, Window::ReadOverlap, true, 1.0);
    row.exact_e = exact_table.total() > 0.0 ? analysis::correlation_E(exact_table).value : 0.0;
    if (table.total() > 0.0) row.e = analysis::correlation_E(table);
    else {
      row.e.value = std::nan("");
      row.e.sigma = std::nan("");
      row.e.flagged = true;
      row.e.note = "no coincidences";
    }
    es.push_back(row.e);
    s.rows.push_back(row);
  }
  const auto g2 = analysis::g2_cross(pooled_counts(result, Window::WriteOverlap, Window::ReadOverlap, exact, trials));
  s.add("g2_overlap", g2);

  bool all_defined = true;
  for (const auto& e : es) all_defined = all_defined && !e.flagged;

  if (config.kind == ExperimentKind::BellTest) {
    if (es.size() == 4 && all_defined) s.add("S", analysis::chsh_S({es[0], es[1], es[2], es[3]}));
    return s;
  }
  if (!all_defined || es.empty()) return s;

  const auto v = analysis::visibility_max(es);
  s.add("V", v);
  // Fitted amplitude over phi_w when the sweep is a single phi_r curve with enough points.
  bool single_curve = es.size() >= 6;
  for (const auto& row : s.rows) single_curve = single_curve && row.phi_r == s.rows.front().phi_r;
  if (single_curve) {
    std::vector<double> phi, val, sig;
    for (const auto& row : s.rows) {
      phi.push_back(row.phi_w);
      val.push_back(row.e.value);
      sig.push_back(row.e.sigma);
    }
    const auto fit = analysis::fit_sinusoid(phi, val, sig);
    AnalysisResult vf;
    vf.method = "visibility-fitted-amplitude";
    vf.value = fit.amplitude();
    const double a2 = fit.a * fit.a + fit.b * fit.b;
    vf.sigma = a2 > 0.0 ? std::sqrt(std::max(0.0, (fit.a * fit.a * fit.covariance[1][1] + fit.b * fit.b * fit.covariance[2][2] +
                                                 2.0 * fit.a * fit.b * fit.covariance[1][2]) / a2))
                        : 0.0;
    s.add("V_fit", vf);
  }
  if (!g2.flagged && g2.value > 0.0 && v.value <= 1.0) s.add("R", analysis::witness_R(v, g2, g2));
  if (config.kind == ExperimentKind::Calibration) {
    for (const auto& run : simulate_sideband_asymmetry(config, config.trials))
      s.add("n_th_" + std::string(to_string(run.role)), run.estimate);
  }
  return s;
}

}  // namespace phonon::workflow
