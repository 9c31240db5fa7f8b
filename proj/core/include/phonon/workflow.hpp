#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phonon/analysis.hpp"
#include "phonon/protocol.hpp"

namespace phonon::workflow {

// Stokes / anti-Stokes probes of one packet at equal pulse energy.
struct SidebandRun {
  PulseRole role = PulseRole::WriteEarly;
  double n_th = 0.0;       // configured occupancy
  double probe_p = 0.0;    // sinh^2 r of the Stokes probe, sin^2 theta of the anti-Stokes probe
  double stokes_probability = 0.0;
  double anti_stokes_probability = 0.0;
  double stokes_counts = 0.0;
  double anti_stokes_counts = 0.0;
  std::uint64_t trials = 0;
  // From background-subtracted counts.
  analysis::AnalysisResult estimate;
};

// One run per pulse in the schedule. Each probe is evaluated exactly with the configured engine,
// then counts are drawn for `trials` repetitions; the known dark-count background is subtracted
// before the asymmetry estimate.
std::vector<SidebandRun> simulate_sideband_asymmetry(const ExperimentConfig& config, std::uint64_t trials);

struct ChshCalibrationRun {
  std::vector<double> phi_w;
  std::vector<analysis::AnalysisResult> e0;  // phi_r = 0
  std::vector<analysis::AnalysisResult> e1;  // phi_r = pi/2
  analysis::ChshCalibration fit;
};

// Sweeps phi_w over `points` values at phi_r in {0, pi/2}, fits both curves and chooses the CHSH
// settings. Sampled when `sample` is set, else from the exact distributions (errors for `trials`).
ChshCalibrationRun calibrate_chsh(const ExperimentConfig& config, int points = 12, bool sample = true,
                                  std::uint64_t trials = 0);

// Copy of the config set up as a Bell test at the given settings.
ExperimentConfig with_chsh(const ExperimentConfig& config, const ChshSettings& settings);

// Named estimates of one experiment run, in insertion order.
struct Summary {
  std::vector<std::pair<std::string, analysis::AnalysisResult>> values;
  // Per phase setting: phi_w, phi_r, E (overlap windows) when defined.
  struct Row {
    double phi_w = 0.0;
    double phi_r = 0.0;
    double total_phase = 0.0;
    analysis::AnalysisResult e;
    double exact_e = 0.0;
  };
  std::vector<Row> rows;

  void add(std::string name, analysis::AnalysisResult r) { values.emplace_back(std::move(name), std::move(r)); }
  const analysis::AnalysisResult& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

// The analysis chain appropriate to the experiment kind. `exact` evaluates estimators on the
// exact distributions with `trials` expected repetitions instead of sampled counts.
Summary summarize(const ExperimentConfig& config, const protocol::ExperimentResult& result, bool exact = false);

}  // namespace phonon::workflow
