#include "phonon/model.hpp"

#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "phonon/errors.hpp"

namespace phonon {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

bool is_probability(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void require_probability(double v, const std::string& field) {
  require(is_probability(v), "probability/occupancy out of range: " + field + " = " + std::to_string(v));
}

void require_positive(double v, const std::string& field) {
  require(std::isfinite(v) && v > 0.0, field + " must be > 0 (got " + std::to_string(v) + ")");
}

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
  for (const auto& [name, value] : table)
    if (name == text) return value;
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::array<std::pair<std::string_view, PulseRole>, 4> kRoleNames = {{
    {"WriteEarly", PulseRole::WriteEarly},
    {"WriteLate", PulseRole::WriteLate},
    {"ReadEarly", PulseRole::ReadEarly},
    {"ReadLate", PulseRole::ReadLate},
}};

constexpr std::array<std::pair<std::string_view, ExperimentKind>, 5> kKindNames = {{
    {"ThermalG2Tau", ExperimentKind::ThermalG2Tau},
    {"DoubleCrossCorrelation", ExperimentKind::DoubleCrossCorrelation},
    {"TimeBinEntanglement", ExperimentKind::TimeBinEntanglement},
    {"BellTest", ExperimentKind::BellTest},
    {"Calibration", ExperimentKind::Calibration},
}};

constexpr std::array<std::pair<std::string_view, EngineKind>, 2> kEngineNames = {{
    {"fock", EngineKind::Fock},
    {"gaussian", EngineKind::Gaussian},
}};

double origin_slope(const std::vector<std::pair<double, double>>& anchors) {
  double num = 0.0, den = 0.0;
  for (const auto& [e, p] : anchors) {
    require(e > 0.0 && p > 0.0, "calibration anchors must be strictly positive");
    num += e * p;
    den += e * e;
  }
  require(den > 0.0, "calibration needs at least one anchor");
  return num / den;
}

}  // namespace

std::string_view to_string(PulseRole role) { return kRoleNames[index_of(role)].first; }
std::string_view to_string(Detuning detuning) { return detuning == Detuning::Blue ? "blue" : "red"; }
std::string_view to_string(ExperimentKind kind) { return kKindNames[static_cast<std::size_t>(kind)].first; }
std::string_view to_string(EngineKind kind) { return kEngineNames[static_cast<std::size_t>(kind)].first; }
PulseRole parse_pulse_role(std::string_view text) { return parse_enum(text, kRoleNames, "pulse role"); }
ExperimentKind parse_experiment_kind(std::string_view text) { return parse_enum(text, kKindNames, "experiment kind"); }
EngineKind parse_engine_kind(std::string_view text) { return parse_enum(text, kEngineNames, "engine"); }

void CavityParams::validate() const {
  require_positive(wavelength, "cavity.wavelength");
  require_positive(kappa, "cavity.kappa");
  require_positive(kappa_i, "cavity.kappa_i");
  require_positive(g0, "cavity.g0");
  require_positive(mech_frequency, "cavity.mech_frequency");
  require(kappa_i <= kappa, "cavity.kappa_i must not exceed cavity.kappa");
}

void WaveguideParams::validate() const {
  require_positive(round_trip_time, "waveguide.round_trip_time");
  require_positive(group_velocity, "waveguide.group_velocity");
  require_positive(length, "waveguide.length");
  require_positive(t1, "waveguide.t1");
  require(t1 > round_trip_time, "waveguide.t1 must exceed the round-trip time");
  require_probability(retrieval_efficiency, "waveguide.retrieval_efficiency");
}

std::vector<std::string> WaveguideParams::warnings() const {
  std::vector<std::string> out;
  const double expected = 2.0 * length / group_velocity;
  if (std::abs(round_trip_time - expected) > 0.2 * expected)
    out.push_back("waveguide.round_trip_time differs from 2*length/group_velocity by more than 20%");
  return out;
}

double WaveguideParams::t1_survival(double elapsed) const { return std::exp(-elapsed / t1); }

void PulseSpec::validate(double perturbative_guard) const {
  const std::string name = "pulse " + std::string(to_string(role));
  require(std::isfinite(scattering_probability) && scattering_probability >= 0.0 && scattering_probability < 1.0,
          "probability/occupancy out of range: " + name + ".scattering_probability");
  require(scattering_probability < perturbative_guard,
          name + ".scattering_probability " + std::to_string(scattering_probability) +
              " violates the perturbative guard " + std::to_string(perturbative_guard));
  require(std::isfinite(energy) && energy >= 0.0, name + ".energy must be >= 0");
  require_positive(duration_fwhm, name + ".duration_fwhm");
  require(std::isfinite(center_time), name + ".center_time must be finite");
  require((detuning == Detuning::Blue) == is_write(role), name + ": write pulses are blue-detuned, reads red-detuned");
}

double PhaseSettings::phi_0() const {
  const double v = std::fmod(2.0 * phi_off_ + kPi / 2.0, 2.0 * kPi);
  return v < 0.0 ? v + 2.0 * kPi : v;
}

double NoiseModel::n_th_at(PulseRole role) const {
  double n = 0.0;
  for (const auto& step : thermal_schedule)
    if (step.after_pulse == role) n = step.n_th;
  return n;
}

void NoiseModel::validate() const {
  for (const auto& step : thermal_schedule)
    require(std::isfinite(step.n_th) && step.n_th >= 0.0,
            "probability/occupancy out of range: noise.thermal_schedule." + std::string(to_string(step.after_pulse)) +
                " = " + std::to_string(step.n_th));
  require_probability(interferometer_visibility, "noise.interferometer_visibility");
  require(std::abs(splitting_asymmetry) < 1.0, "noise.splitting_asymmetry must be in (-1, 1)");
  require(std::isfinite(write_phase_jitter_fwhm) && write_phase_jitter_fwhm >= 0.0,
          "noise.write_phase_jitter_fwhm must be >= 0");
  require(std::isfinite(read_phase_jitter_fwhm) && read_phase_jitter_fwhm >= 0.0,
          "noise.read_phase_jitter_fwhm must be >= 0");
  for (std::size_t d = 0; d < kDetectorCount; ++d) {
    require_probability(detector_efficiency[d], "noise.detector_efficiency");
    require_probability(filter_pulse_efficiency[d], "noise.filter_pulse_efficiency");
    require_probability(leakage_prob[0][d], "noise.leakage.write");
    require_probability(leakage_prob[1][d], "noise.leakage.read");
  }
  require_probability(dark_count_prob, "noise.dark_count_prob");
  require_probability(coupling_efficiency, "noise.coupling_efficiency");
}

std::vector<std::string> NoiseModel::warnings() const {
  std::vector<std::string> out;
  double previous = -1.0;
  for (PulseRole role : kPulseRoles) {
    const double n = n_th_at(role);
    if (n < previous) out.push_back("noise.thermal_schedule decreases at " + std::string(to_string(role)));
    previous = n;
  }
  if (std::abs(splitting_asymmetry) > 0.005)
    out.push_back("noise.splitting_asymmetry above the 0.5% specified for the interferometer splitters");
  return out;
}

const PulseSpec* ExperimentConfig::find_pulse(PulseRole role) const {
  for (const auto& p : pulses)
    if (p.role == role) return &p;
  return nullptr;
}

double ExperimentConfig::scattering_probability(PulseRole role) const {
  const PulseSpec* p = find_pulse(role);
  return p ? p->scattering_probability : 0.0;
}

std::vector<std::pair<double, double>> ChshSettings::points() const {
  return {{phi_w[0], phi_r[0]}, {phi_w[1], phi_r[0]}, {phi_w[0], phi_r[1]}, {phi_w[1], phi_r[1]}};
}

ChshSettings default_chsh_settings(double phi_off) {
  const double zero = kPi / 2.0 - 2.0 * phi_off;
  return ChshSettings{{zero + kPi / 4.0, zero - kPi / 4.0}, {0.0, kPi / 2.0}};
}

std::vector<std::pair<double, double>> ExperimentConfig::phase_points() const {
  if (kind == ExperimentKind::BellTest && chsh) return chsh->points();
  if (!sweep.points.empty()) return sweep.points;
  return {{phases.phi_w(), phases.phi_r()}};
}

void ExperimentConfig::validate() const {
  require(trials >= 1, "trials must be >= 1");
  require(workers >= 1, "workers must be >= 1");
  require(engine.truncation >= 1, "engine.truncation must be >= 1");
  require(perturbative_guard > 0.0 && perturbative_guard <= 1.0, "perturbative_guard must be in (0, 1]");
  require(thermal_injection_epsilon > 0.0 && thermal_injection_epsilon <= 1.0,
          "thermal_injection_epsilon must be in (0, 1]");
  require_positive(repetition_period, "repetition_period");
  cavity.validate();
  waveguide.validate();
  noise.validate();
  for (const auto& p : pulses) p.validate(perturbative_guard);

  for (const auto& [w, r] : sweep.points)
    require(std::isfinite(w) && std::isfinite(r), "phase sweep points must be finite");

  if (kind == ExperimentKind::ThermalG2Tau) {
    require(pulses.empty(), "ThermalG2Tau uses a continuous pump and takes no discrete pulses");
    require(spectrum.mode_count >= 2 || !spectrum.file.empty(), "spectrum.mode_count must be >= 2");
    require(spectrum.file.empty() ? spectrum.fsr_mean > 0.0 : true, "spectrum.fsr_mean must be > 0");
    require(spectrum.fsr_std >= 0.0, "spectrum.fsr_std must be >= 0");
    require(spectrum.delay_step > 0.0 && spectrum.delay_max > spectrum.delay_step,
            "spectrum delay grid must satisfy 0 < delay_step < delay_max");
    return;
  }

  for (PulseRole role : kPulseRoles) {
    int count = 0;
    for (const auto& p : pulses) count += p.role == role;
    require(count == 1, "pulse schedule needs exactly one " + std::string(to_string(role)) + " pulse");
  }
  const double half = waveguide.round_trip_time / 2.0;
  const double tol = 1e-9 * waveguide.round_trip_time;
  require(std::abs(find_pulse(PulseRole::WriteLate)->center_time - find_pulse(PulseRole::WriteEarly)->center_time -
                   half) <= tol,
          "write pulses must be separated by round_trip_time/2");
  require(std::abs(find_pulse(PulseRole::ReadLate)->center_time - find_pulse(PulseRole::ReadEarly)->center_time -
                   half) <= tol,
          "read pulses must be separated by round_trip_time/2");
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out = waveguide.warnings();
  for (auto& w : noise.warnings()) out.push_back(std::move(w));
  if (repetition_period < 7.0 * waveguide.t1)
    out.push_back("repetition_period is shorter than 7*T1; trials are still treated as independent");
  return out;
}

double scattering_probability_from_energy(double energy, ProcessRole role, const ScatteringCalibration& calibration,
                                          double perturbative_guard) {
  require(std::isfinite(energy) && energy >= 0.0, "pulse energy must be >= 0");
  const double slope = origin_slope(role == ProcessRole::Write ? calibration.write : calibration.read);
  const double p = slope * energy;
  if (p >= perturbative_guard) {
    const double clipped = std::nextafter(perturbative_guard, 0.0);
    spdlog::warn("scattering probability {:.4g} at {:.4g} J clipped to {:.4g}", p, energy, clipped);
    return clipped;
  }
  return p;
}

PulseSequence build_pulse_sequence(ExperimentKind kind, double round_trip_time, const BaseEnergies& energies,
                                   const ScatteringCalibration& calibration, double perturbative_guard) {
  require(std::isfinite(round_trip_time) && round_trip_time > 0.0, "round-trip time must be > 0");
  PulseSequence seq;
  if (kind == ExperimentKind::ThermalG2Tau) {
    seq.pump = PumpDescriptor{Detuning::Red, true};
    return seq;
  }
  const double pw = scattering_probability_from_energy(energies.write, ProcessRole::Write, calibration, perturbative_guard);
  const double pr = scattering_probability_from_energy(energies.read, ProcessRole::Read, calibration, perturbative_guard);
  const double t[4] = {0.0, round_trip_time / 2.0, round_trip_time, 1.5 * round_trip_time};
  for (PulseRole role : kPulseRoles) {
    PulseSpec p;
    p.role = role;
    p.center_time = t[index_of(role)];
    p.duration_fwhm = 30e-9;
    p.energy = is_write(role) ? energies.write : energies.read;
    p.scattering_probability = is_write(role) ? pw : pr;
    p.detuning = is_write(role) ? Detuning::Blue : Detuning::Red;
    seq.pulses.push_back(p);
  }
  return seq;
}

double jitter_sigma(double fwhm) {
  require(std::isfinite(fwhm) && fwhm >= 0.0, "jitter FWHM must be >= 0");
  return fwhm / kFwhmPerSigma;
}

double sample_phase_jitter(SplitMix64& rng, double fwhm) {
  const double sigma = jitter_sigma(fwhm);
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, sigma);
  return normal(rng);
}

}  // namespace phonon
