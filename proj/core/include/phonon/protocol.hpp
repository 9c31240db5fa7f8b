#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "phonon/circuit.hpp"
#include "phonon/model.hpp"
#include "phonon/sampler.hpp"

namespace phonon::protocol {

enum class Window { WriteEarlyDirect, WriteOverlap, WriteLateDelayed, ReadEarlyDirect, ReadOverlap, ReadLateDelayed };
std::string_view to_string(Window window);

struct InterferometerModel {
  double delay = 63e-9;
  double phi_off = 0.0;
  double visibility = 1.0;
  // Relative deviation of both splitters from 50:50.
  double splitting_asymmetry = 0.0;
  // false blocks the delayed arm, as in the cross-correlation runs.
  bool connected = true;

  static InterferometerModel from_config(const ExperimentConfig& config);
  void validate() const;
};

struct DetectionChain {
  std::array<double, kDetectorCount> detector_efficiency = {1.0, 1.0};
  std::array<double, kDetectorCount> filter_efficiency = {1.0, 1.0};
  double coupling_efficiency = 1.0;
  std::array<std::array<double, kDetectorCount>, 2> leakage = {{{0.0, 0.0}, {0.0, 0.0}}};
  double dark_count_prob = 0.0;

  static DetectionChain from_noise(const NoiseModel& noise);
  // Product of coupling, filter and detector efficiencies for one detector.
  double efficiency(std::size_t detector) const;
  // Probability of a click unrelated to the signal in one window: dark count or pump leakage.
  double extra_click(ProcessRole process, std::size_t detector) const;
};

struct DetectorSlot {
  Window window = Window::WriteOverlap;
  std::size_t detector = 0;
  std::string label() const;
};

struct ProtocolCircuit {
  Circuit circuit;
  std::vector<Detector> detectors;
  std::vector<DetectorSlot> slots;

  // Index of the detector for (window, detector), or -1.
  int find(Window window, std::size_t detector) const;
  // Bits of all detectors in the window.
  std::uint32_t window_mask(Window window) const;
};

// Carried incoherent occupancy of each mechanical packet; noise injections top it up to the
// scheduled occupancy of the pulse the packet interacts with.
class ThermalTracker {
public:
  explicit ThermalTracker(double epsilon = 0.01) : epsilon_(epsilon) {}
  // Appends the injection that raises `mode` to `target` (nothing if already at or above it).
  void top_up(Circuit& circuit, const std::string& mode, double target);
  void decay(const std::string& mode, double survival);
  double carried(const std::string& mode) const;

private:
  double epsilon_;
  std::vector<std::pair<std::string, double>> carried_;
  double& slot(const std::string& mode);
};

// Mode labels.
inline const std::string kWriteEarly = "o_wE";
inline const std::string kWriteLate = "o_wL";
inline const std::string kReadEarly = "o_rE";
inline const std::string kReadLate = "o_rL";
inline const std::string kMechEarly = "m_E";
inline const std::string kMechLate = "m_L";

// Stage builders. Each appends engine operations to the circuit.
void append_write_stage(Circuit& circuit, const ExperimentConfig& config, double phi_w, ThermalTracker& thermal);
// One round trip: T1 decay and the dispersion retrieval factor on both packets.
void append_storage(Circuit& circuit, const ExperimentConfig& config, ThermalTracker& thermal);
void append_read_stage(Circuit& circuit, const ExperimentConfig& config, double phi_r, ThermalTracker& thermal);
// Routes the Early/Late optical modes of one process through the interferometer to detector modes.
// `extra_phase` is added to phi_off on the direct arm (jitter). Registers detectors in `out`.
void append_interferometer(ProtocolCircuit& out, ProcessRole process, const InterferometerModel& interferometer,
                           double extra_phase, const DetectionChain& chain, bool all_windows);

struct BuildOptions {
  // Also detect the non-interfering early-direct and late-delayed windows.
  bool all_windows = false;
};

ProtocolCircuit build_circuit(const ExperimentConfig& config, double phi_w, double phi_r, double write_jitter = 0.0,
                              double read_jitter = 0.0, const BuildOptions& options = {});

// Same experiment with every noise source removed: no heating, unit visibility, no jitter,
// lossless detection without dark counts or leakage. Losses in the waveguide are kept.
ExperimentConfig noiseless(const ExperimentConfig& config);

std::unique_ptr<Engine> make_engine(const EngineSettings& settings);

// Pattern probabilities as a Fourier series in the total interferometric phase
// Phi = phi_w + phi_r + 2 phi_off (+ jitter); statistics depend on the phases only through Phi.
class PhaseResponse {
public:
  static PhaseResponse compute(const ExperimentConfig& config, const Engine& engine, const BuildOptions& options = {});
  static PhaseResponse constant(const OutcomeDistribution& distribution);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<DetectorSlot>& slots() const { return slots_; }
  std::size_t pattern_count() const { return a_.size(); }
  std::size_t harmonics() const { return a_.empty() ? 0 : a_.front().size(); }
  bool phase_independent() const { return harmonics() <= 1; }

  // Distribution at total phase Phi.
  OutcomeDistribution at(double phi_total) const;
  // Average over Gaussian jitter of Phi with standard deviation sigma.
  OutcomeDistribution averaged(double phi_total, double sigma) const;
  // Lower bound on P(no click) over all phases.
  double min_no_click() const;
  // Probability of the given pattern at phase Phi.
  double probability(std::uint32_t pattern, double phi_total) const;
  // Writes all pattern probabilities at phase Phi into out (resized as needed).
  void evaluate(double phi_total, std::vector<double>& out) const;

private:
  std::vector<std::string> labels_;
  std::vector<DetectorSlot> slots_;
  // p(Phi) = sum_k a_[pattern][k] cos(k Phi) + b_[pattern][k] sin(k Phi).
  std::vector<std::vector<double>> a_, b_;
};

// Combined jitter standard deviation of Phi.
double total_jitter_sigma(const NoiseModel& noise);

struct SettingResult {
  double phi_w = 0.0;
  double phi_r = 0.0;
  // Phi = phi_w + phi_r + 2 phi_off, before jitter.
  double total_phase = 0.0;
  // Exact distribution averaged over the phase jitter.
  OutcomeDistribution exact;
  // Empty when the run was exact-only.
  SampledCounts sampled;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::BellTest;
  std::string engine;
  std::vector<std::string> labels;
  std::vector<DetectorSlot> slots;
  std::vector<SettingResult> settings;

  std::uint32_t window_mask(Window window) const;
  std::uint32_t detector_bit(Window window, std::size_t detector) const;
};

struct RunOptions {
  bool sample = true;
  bool keep_records = false;
  // Overrides config.trials / config.workers when set (> 0).
  std::uint64_t trials = 0;
  int workers = 0;
  BuildOptions build = {};
};

// Exact distributions for every phase point and, when sampling, Monte Carlo counts. Setting i
// draws from substream i, so results depend only on (config, seed).
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct RateFactor {
  std::string name;
  double value = 0.0;
  std::string note;
};

struct RateBudget {
  double repetition_rate = 0.0;  // 1/s
  std::vector<RateFactor> herald_factors;
  // Applied on top of the herald rate.
  std::vector<RateFactor> coincidence_factors;
  double heralds_per_hour = 0.0;
  double coincidences_per_hour = 0.0;
  std::vector<std::string> assumptions;
};

RateBudget rate_budget(const ExperimentConfig& config);

}  // namespace phonon::protocol
