#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phonon/rng.hpp"

namespace phonon {

inline constexpr double kPi = 3.14159265358979323846;

// Gaussian FWHM to standard deviation.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

enum class PulseRole { WriteEarly, WriteLate, ReadEarly, ReadLate };
enum class Detuning { Blue, Red };
enum class ExperimentKind { ThermalG2Tau, DoubleCrossCorrelation, TimeBinEntanglement, BellTest, Calibration };
enum class EngineKind { Fock, Gaussian };
enum class ProcessRole { Write, Read };

inline constexpr std::array<PulseRole, 4> kPulseRoles = {PulseRole::WriteEarly, PulseRole::WriteLate,
                                                         PulseRole::ReadEarly, PulseRole::ReadLate};

std::string_view to_string(PulseRole role);
std::string_view to_string(Detuning detuning);
std::string_view to_string(ExperimentKind kind);
std::string_view to_string(EngineKind kind);
PulseRole parse_pulse_role(std::string_view text);
ExperimentKind parse_experiment_kind(std::string_view text);
EngineKind parse_engine_kind(std::string_view text);

constexpr bool is_write(PulseRole role) { return role == PulseRole::WriteEarly || role == PulseRole::WriteLate; }
constexpr bool is_late(PulseRole role) { return role == PulseRole::WriteLate || role == PulseRole::ReadLate; }
constexpr ProcessRole process_of(PulseRole role) { return is_write(role) ? ProcessRole::Write : ProcessRole::Read; }
constexpr std::size_t index_of(PulseRole role) { return static_cast<std::size_t>(role); }

// Frequencies are ordinary frequencies (the /2π values quoted for optomechanical devices).
struct CavityParams {
  double wavelength = 1556.06e-9;
  double kappa = 1.05e9;
  double kappa_i = 250e6;
  double g0 = 380e3;
  double mech_frequency = 5.154e9;

  void validate() const;
  bool operator==(const CavityParams&) const = default;
};

struct WaveguideParams {
  double round_trip_time = 126e-9;
  double group_velocity = 2000.0;
  double length = 126e-6;
  double t1 = 2.2e-6;
  // Extra readout factor for dispersion (revival population below unity); T1 loss is separate.
  double retrieval_efficiency = 1.0;

  void validate() const;
  // Non-fatal inconsistencies, e.g. round-trip time far from 2 L / v_g.
  std::vector<std::string> warnings() const;
  double t1_survival(double elapsed) const;
  bool operator==(const WaveguideParams&) const = default;
};

struct PulseSpec {
  PulseRole role = PulseRole::WriteEarly;
  double center_time = 0.0;
  double duration_fwhm = 30e-9;
  double energy = 0.0;
  double scattering_probability = 0.0;
  Detuning detuning = Detuning::Blue;

  void validate(double perturbative_guard) const;
  bool operator==(const PulseSpec&) const = default;
};

// phi_0 is derived from phi_off on every read and never stored.
class PhaseSettings {
public:
  PhaseSettings() = default;
  PhaseSettings(double phi_w, double phi_r, double phi_off) : phi_w_(phi_w), phi_r_(phi_r), phi_off_(phi_off) {}

  double phi_w() const { return phi_w_; }
  double phi_r() const { return phi_r_; }
  double phi_off() const { return phi_off_; }
  double phi_0() const;
  // Sum entering the overlap-window statistics.
  double total_phase() const { return phi_w_ + phi_r_ + 2.0 * phi_off_; }

  void set_phi_w(double v) { phi_w_ = v; }
  void set_phi_r(double v) { phi_r_ = v; }
  void set_phi_off(double v) { phi_off_ = v; }

  bool operator==(const PhaseSettings&) const = default;

private:
  double phi_w_ = 0.0;
  double phi_r_ = 0.0;
  double phi_off_ = 0.0;
};

// Explicit list of (phi_w, phi_r) points; empty means the single setting in PhaseSettings.
struct PhaseSweep {
  std::vector<std::pair<double, double>> points;
  bool operator==(const PhaseSweep&) const = default;
};

// CHSH settings in the order E(w0,r0), E(w1,r0), E(w0,r1), E(w1,r1).
struct ChshSettings {
  std::array<double, 2> phi_w = {0.0, 0.0};
  std::array<double, 2> phi_r = {0.0, 0.0};
  std::vector<std::pair<double, double>> points() const;
  bool operator==(const ChshSettings&) const = default;
};

// Settings maximizing S for E = cos(phi_w + phi_r + 2 phi_off): phi_w on either side of the
// negative-slope zero crossing of the phi_r = 0 curve, phi_r in {0, pi/2}.
ChshSettings default_chsh_settings(double phi_off);

struct ThermalStep {
  PulseRole after_pulse = PulseRole::WriteEarly;
  double n_th = 0.0;
  bool operator==(const ThermalStep&) const = default;
};

inline constexpr std::size_t kDetectorCount = 2;

struct NoiseModel {
  std::vector<ThermalStep> thermal_schedule;
  double interferometer_visibility = 1.0;
  // Relative deviation of the interferometer splitters from 50:50.
  double splitting_asymmetry = 0.0;
  double write_phase_jitter_fwhm = 0.0;
  double read_phase_jitter_fwhm = 0.0;
  std::array<double, kDetectorCount> detector_efficiency = {0.85, 0.85};
  double dark_count_prob = 1e-6;
  // leakage_prob[process][detector], photons per repetition reaching the detector.
  std::array<std::array<double, kDetectorCount>, 2> leakage_prob = {{{2e-7, 4e-7}, {1.4e-6, 2.6e-6}}};
  double coupling_efficiency = 0.5;
  std::array<double, kDetectorCount> filter_pulse_efficiency = {0.65 * 0.6, 0.65};
  // Which of the defaults above the user left untouched; reported as assumptions.
  bool detector_efficiency_assumed = true;
  bool dark_count_assumed = true;

  // Occupancy scheduled for the packet interacting with the given pulse (0 if absent).
  double n_th_at(PulseRole role) const;
  void validate() const;
  std::vector<std::string> warnings() const;
  bool operator==(const NoiseModel&) const = default;
};

struct EngineSettings {
  EngineKind kind = EngineKind::Gaussian;
  int truncation = 4;
  bool operator==(const EngineSettings&) const = default;
};

// Energy to scattering-probability anchors per process role.
struct ScatteringCalibration {
  std::vector<std::pair<double, double>> write = {{15e-15, 0.0013}, {26e-15, 0.002}};
  std::vector<std::pair<double, double>> read = {{112e-15, 0.007}, {225e-15, 0.014}};
  bool operator==(const ScatteringCalibration&) const = default;
};

// Synthetic or file-based mode spectrum for the thermal correlation experiment.
struct SpectrumSource {
  std::string file;           // two/three-column text; empty selects synthetic
  double fsr_mean = 7.94e6;   // Hz
  double fsr_std = 0.0;       // Hz
  int mode_count = 12;
  double envelope_fwhm = 0.0; // Hz, participation envelope; 0 gives equal amplitudes
  double delay_max = 400e-9;
  double delay_step = 0.25e-9;
  bool operator==(const SpectrumSource&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::BellTest;
  CavityParams cavity;
  WaveguideParams waveguide;
  std::vector<PulseSpec> pulses;
  PhaseSettings phases;
  PhaseSweep sweep;
  std::optional<ChshSettings> chsh;
  NoiseModel noise;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  EngineSettings engine;
  int workers = 1;
  double repetition_period = 15e-6;
  double perturbative_guard = 0.05;
  double thermal_injection_epsilon = 0.01;
  ScatteringCalibration calibration;
  SpectrumSource spectrum;

  const PulseSpec* find_pulse(PulseRole role) const;
  double scattering_probability(PulseRole role) const;
  // Phase points run by the experiment: CHSH settings for Bell tests, else the sweep if present,
  // else the single setting.
  std::vector<std::pair<double, double>> phase_points() const;
  void validate() const;
  std::vector<std::string> warnings() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Least-squares slope through the origin over all anchors of the role, evaluated at energy.
// Results at or above the guard are clipped just below it and logged.
double scattering_probability_from_energy(double energy, ProcessRole role, const ScatteringCalibration& calibration,
                                          double perturbative_guard = 0.05);

struct PumpDescriptor {
  Detuning detuning = Detuning::Red;
  bool continuous = true;
};

struct PulseSequence {
  std::vector<PulseSpec> pulses;
  std::optional<PumpDescriptor> pump;
};

struct BaseEnergies {
  double write = 26e-15;
  double read = 112e-15;
};

PulseSequence build_pulse_sequence(ExperimentKind kind, double round_trip_time, const BaseEnergies& energies,
                                   const ScatteringCalibration& calibration = {}, double perturbative_guard = 0.05);

double jitter_sigma(double fwhm);

// Zero-mean Gaussian phase with the given FWHM; deterministic for a given rng state.
double sample_phase_jitter(SplitMix64& rng, double fwhm);

}  // namespace phonon
