#include "phonon/protocol.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "phonon/errors.hpp"

namespace phonon::protocol {

namespace {

constexpr std::array<std::string_view, 6> kWindowNames = {"write-early-direct", "write-overlap", "write-late-delayed",
                                                          "read-early-direct",  "read-overlap",  "read-late-delayed"};

Window window_of(ProcessRole process, int offset) {
  return static_cast<Window>((process == ProcessRole::Write ? 0 : 3) + offset);
}

std::string tag(ProcessRole process) { return process == ProcessRole::Write ? "w" : "r"; }

double pulse_probability(const ExperimentConfig& config, PulseRole role) {
  const PulseSpec* pulse = config.find_pulse(role);
  return pulse ? pulse->scattering_probability : 0.0;
}

bool interferes(const InterferometerModel& m) { return m.connected && m.visibility > 0.0; }

}  // namespace

std::string_view to_string(Window window) { return kWindowNames.at(static_cast<std::size_t>(window)); }

std::string DetectorSlot::label() const { return std::string(to_string(window)) + "/D" + std::to_string(detector + 1); }

InterferometerModel InterferometerModel::from_config(const ExperimentConfig& config) {
  InterferometerModel m;
  m.delay = 0.5 * config.waveguide.round_trip_time;
  m.phi_off = config.phases.phi_off();
  m.visibility = config.noise.interferometer_visibility;
  m.splitting_asymmetry = config.noise.splitting_asymmetry;
  m.connected = config.kind != ExperimentKind::DoubleCrossCorrelation;
  return m;
}

void InterferometerModel::validate() const {
  if (!(visibility >= 0.0 && visibility <= 1.0)) throw ValidationError("interferometer visibility must be in [0, 1]");
  if (!(std::abs(splitting_asymmetry) < 1.0)) throw ValidationError("splitting asymmetry must be in (-1, 1)");
  if (!(delay > 0.0)) throw ValidationError("interferometer delay must be > 0");
}

DetectionChain DetectionChain::from_noise(const NoiseModel& noise) {
  DetectionChain c;
  c.detector_efficiency = noise.detector_efficiency;
  c.filter_efficiency = noise.filter_pulse_efficiency;
  c.coupling_efficiency = noise.coupling_efficiency;
  c.leakage = noise.leakage_prob;
  c.dark_count_prob = noise.dark_count_prob;
  return c;
}

double DetectionChain::efficiency(std::size_t detector) const {
  return coupling_efficiency * filter_efficiency.at(detector) * detector_efficiency.at(detector);
}

double DetectionChain::extra_click(ProcessRole process, std::size_t detector) const {
  const double leak = leakage[process == ProcessRole::Write ? 0 : 1].at(detector);
  return 1.0 - (1.0 - dark_count_prob) * (1.0 - leak);
}

int ProtocolCircuit::find(Window window, std::size_t detector) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].window == window && slots[i].detector == detector) return static_cast<int>(i);
  return -1;
}

std::uint32_t ProtocolCircuit::window_mask(Window window) const {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].window == window) mask |= 1u << i;
  return mask;
}

double& ThermalTracker::slot(const std::string& mode) {
  for (auto& [name, n] : carried_)
    if (name == mode) return n;
  carried_.emplace_back(mode, 0.0);
  return carried_.back().second;
}

double ThermalTracker::carried(const std::string& mode) const {
  for (const auto& [name, n] : carried_)
    if (name == mode) return n;
  return 0.0;
}

void ThermalTracker::top_up(Circuit& circuit, const std::string& mode, double target) {
  double& n = slot(mode);
  const double kept = (1.0 - epsilon_) * n;
  const double added = std::max(0.0, target - kept);
  if (added > 0.0) {
    circuit.thermal_noise(mode, added, epsilon_);
    n = kept + added;
  }
}

void ThermalTracker::decay(const std::string& mode, double survival) { slot(mode) *= survival; }

void append_write_stage(Circuit& circuit, const ExperimentConfig& config, double phi_w, ThermalTracker& thermal) {
  circuit.add_mode(kWriteEarly).add_mode(kMechEarly);
  thermal.top_up(circuit, kMechEarly, config.noise.n_th_at(PulseRole::WriteEarly));
  circuit.squeeze(kWriteEarly, kMechEarly, pulse_probability(config, PulseRole::WriteEarly), 0.0);

  circuit.add_mode(kWriteLate).add_mode(kMechLate);
  thermal.top_up(circuit, kMechLate, config.noise.n_th_at(PulseRole::WriteLate));
  circuit.squeeze(kWriteLate, kMechLate, pulse_probability(config, PulseRole::WriteLate), phi_w);
}

void append_storage(Circuit& circuit, const ExperimentConfig& config, ThermalTracker& thermal) {
  const double survival =
      config.waveguide.t1_survival(config.waveguide.round_trip_time) * config.waveguide.retrieval_efficiency;
  for (const auto& mode : {kMechEarly, kMechLate}) {
    circuit.loss(mode, survival);
    thermal.decay(mode, survival);
  }
}

void append_read_stage(Circuit& circuit, const ExperimentConfig& config, double phi_r, ThermalTracker& thermal) {
  const auto read = [&](const std::string& optical, const std::string& mech, PulseRole role) {
    circuit.add_mode(optical);
    thermal.top_up(circuit, mech, config.noise.n_th_at(role));
    circuit.beam_splitter(optical, mech, 1.0 - pulse_probability(config, role), 0.0);
    circuit.trace_out(mech);
  };
  read(kReadEarly, kMechEarly, PulseRole::ReadEarly);
  read(kReadLate, kMechLate, PulseRole::ReadLate);
  circuit.phase(kReadLate, phi_r);
}

void append_interferometer(ProtocolCircuit& out, ProcessRole process, const InterferometerModel& m,
                           double extra_phase, const DetectionChain& chain, bool all_windows) {
  Circuit& c = out.circuit;
  const std::string t = tag(process);
  const std::string early = process == ProcessRole::Write ? kWriteEarly : kReadEarly;
  const std::string late = process == ProcessRole::Write ? kWriteLate : kReadLate;
  const double half1 = 0.5 * (1.0 + m.splitting_asymmetry);
  const double half2 = 0.5 * (1.0 - m.splitting_asymmetry);

  const auto add_detector = [&](Window window, std::size_t d, std::vector<std::string> modes) {
    out.detectors.push_back(Detector{DetectorSlot{window, d}.label(), std::move(modes), chain.efficiency(d),
                                     chain.extra_click(process, d)});
    out.slots.push_back(DetectorSlot{window, d});
  };
  // Splits a non-interfering window onto both detectors, or discards it.
  const auto side_window = [&](const std::string& mode, Window window) {
    if (!all_windows) {
      c.trace_out(mode);
      return;
    }
    const std::string other = mode + "_2";
    c.add_mode(other).beam_splitter(mode, other, half2);
    add_detector(window, 0, {mode});
    add_detector(window, 1, {other});
  };

  if (!m.connected) {
    // Delayed arm blocked: Early exits in the early-direct window, Late in the overlap window.
    c.loss(early, half1).loss(late, half1);
    const std::string e2 = "x" + t + "E_2", l2 = "x" + t + "L_2";
    c.add_mode(e2).beam_splitter(early, e2, half2);
    c.add_mode(l2).beam_splitter(late, l2, half2);
    add_detector(window_of(process, 0), 0, {early});
    add_detector(window_of(process, 0), 1, {e2});
    add_detector(window_of(process, 1), 0, {late});
    add_detector(window_of(process, 1), 1, {l2});
    return;
  }

  // First splitter: Early keeps its delayed part, Late its direct part; the remainder leaves
  // in the side windows.
  const std::string xe = "x" + t + "E", xl = "x" + t + "L";
  c.add_mode(xe).beam_splitter(early, xe, half1);
  side_window(xe, window_of(process, 0));
  c.add_mode(xl).beam_splitter(late, xl, half2);
  side_window(xl, window_of(process, 2));

  c.phase(late, m.phi_off + extra_phase);

  std::string perp;
  if (m.visibility < 1.0) {
    perp = "x" + t + "P";
    c.add_mode(perp).beam_splitter(early, perp, m.visibility);
  }

  c.beam_splitter(early, late, half2);
  if (perp.empty()) {
    add_detector(window_of(process, 1), 0, {early});
    add_detector(window_of(process, 1), 1, {late});
  } else {
    const std::string perp2 = perp + "_2";
    c.add_mode(perp2).beam_splitter(perp, perp2, half2);
    add_detector(window_of(process, 1), 0, {early, perp});
    add_detector(window_of(process, 1), 1, {late, perp2});
  }
}

ProtocolCircuit build_circuit(const ExperimentConfig& config, double phi_w, double phi_r, double write_jitter,
                              double read_jitter, const BuildOptions& options) {
  if (config.kind == ExperimentKind::ThermalG2Tau)
    throw ValidationError("thermal correlation runs have no pulse circuit; use the waveguide model");
  const InterferometerModel interferometer = InterferometerModel::from_config(config);
  interferometer.validate();
  const DetectionChain chain = DetectionChain::from_noise(config.noise);

  ProtocolCircuit out;
  ThermalTracker thermal(config.thermal_injection_epsilon);
  append_write_stage(out.circuit, config, phi_w, thermal);
  append_interferometer(out, ProcessRole::Write, interferometer, write_jitter, chain, options.all_windows);
  append_storage(out.circuit, config, thermal);
  append_read_stage(out.circuit, config, phi_r, thermal);
  append_interferometer(out, ProcessRole::Read, interferometer, read_jitter, chain, options.all_windows);
  return out;
}

ExperimentConfig noiseless(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.noise.thermal_schedule.clear();
  c.noise.interferometer_visibility = 1.0;
  c.noise.splitting_asymmetry = 0.0;
  c.noise.write_phase_jitter_fwhm = 0.0;
  c.noise.read_phase_jitter_fwhm = 0.0;
  c.noise.detector_efficiency = {1.0, 1.0};
  c.noise.filter_pulse_efficiency = {1.0, 1.0};
  c.noise.coupling_efficiency = 1.0;
  c.noise.dark_count_prob = 0.0;
  c.noise.leakage_prob = {{{0.0, 0.0}, {0.0, 0.0}}};
  return c;
}

std::unique_ptr<Engine> make_engine(const EngineSettings& settings) {
  return settings.kind == EngineKind::Fock ? make_fock_engine(settings.truncation) : make_gaussian_engine();
}

double total_jitter_sigma(const NoiseModel& noise) {
  return std::hypot(jitter_sigma(noise.write_phase_jitter_fwhm), jitter_sigma(noise.read_phase_jitter_fwhm));
}

PhaseResponse PhaseResponse::constant(const OutcomeDistribution& distribution) {
  PhaseResponse r;
  r.labels_ = distribution.labels();
  for (double p : distribution.probabilities()) {
    r.a_.push_back({p});
    r.b_.push_back({0.0});
  }
  return r;
}

PhaseResponse PhaseResponse::compute(const ExperimentConfig& config, const Engine& engine,
                                     const BuildOptions& options) {
  const double phi_off = config.phases.phi_off();
  const auto evaluate_at = [&](double total, ProtocolCircuit* keep) {
    ProtocolCircuit pc = build_circuit(config, total - 2.0 * phi_off, 0.0, 0.0, 0.0, options);
    OutcomeDistribution d = engine.evaluate(pc.circuit, pc.detectors);
    if (keep) *keep = std::move(pc);
    return d;
  };

  ProtocolCircuit first;
  const OutcomeDistribution d0 = evaluate_at(0.0, &first);
  if (!interferes(InterferometerModel::from_config(config))) {
    PhaseResponse r = constant(d0);
    r.slots_ = first.slots;
    return r;
  }

  // A Fock state with at most N quanta carries harmonics up to N; Gaussian harmonics fall off
  // geometrically with the pair probability.
  const int h = config.engine.kind == EngineKind::Fock ? config.engine.truncation + 1 : 12;
  const int k_samples = 2 * h + 1;
  const std::size_t patterns = d0.probabilities().size();

  PhaseResponse r;
  r.labels_ = d0.labels();
  r.slots_ = first.slots;
  r.a_.assign(patterns, std::vector<double>(h + 1, 0.0));
  r.b_.assign(patterns, std::vector<double>(h + 1, 0.0));
  for (int j = 0; j < k_samples; ++j) {
    const double theta = 2.0 * kPi * j / k_samples;
    const OutcomeDistribution d = j == 0 ? d0 : evaluate_at(theta, nullptr);
    for (std::size_t p = 0; p < patterns; ++p) {
      const double v = d.probabilities()[p];
      r.a_[p][0] += v / k_samples;
      for (int k = 1; k <= h; ++k) {
        r.a_[p][k] += 2.0 * v * std::cos(k * theta) / k_samples;
        r.b_[p][k] += 2.0 * v * std::sin(k * theta) / k_samples;
      }
    }
  }
  return r;
}

void PhaseResponse::evaluate(double phi_total, std::vector<double>& out) const {
  out.resize(a_.size());
  const std::size_t h = harmonics();
  // cos(k x), sin(k x) by the angle-addition recurrence.
  std::array<double, 64> c{}, s{};
  if (h > c.size()) throw ValidationError("phase response: too many harmonics");
  if (h > 1) {
    c[1] = std::cos(phi_total);
    s[1] = std::sin(phi_total);
    for (std::size_t k = 2; k < h; ++k) {
      c[k] = c[k - 1] * c[1] - s[k - 1] * s[1];
      s[k] = s[k - 1] * c[1] + c[k - 1] * s[1];
    }
  }
  for (std::size_t p = 0; p < a_.size(); ++p) {
    const auto& a = a_[p];
    const auto& b = b_[p];
    double v = a[0];
    for (std::size_t k = 1; k < h; ++k) v += a[k] * c[k] + b[k] * s[k];
    out[p] = std::max(v, 0.0);
  }
}

double PhaseResponse::probability(std::uint32_t pattern, double phi_total) const {
  const auto& a = a_.at(pattern);
  const auto& b = b_.at(pattern);
  double v = a[0];
  for (std::size_t k = 1; k < a.size(); ++k) v += a[k] * std::cos(k * phi_total) + b[k] * std::sin(k * phi_total);
  return std::max(v, 0.0);
}

OutcomeDistribution PhaseResponse::at(double phi_total) const {
  std::vector<double> p;
  evaluate(phi_total, p);
  return OutcomeDistribution(labels_, std::move(p));
}

OutcomeDistribution PhaseResponse::averaged(double phi_total, double sigma) const {
  std::vector<double> out(a_.size());
  for (std::size_t p = 0; p < a_.size(); ++p) {
    double v = a_[p][0];
    for (std::size_t k = 1; k < a_[p].size(); ++k) {
      const double damp = std::exp(-0.5 * static_cast<double>(k * k) * sigma * sigma);
      v += damp * (a_[p][k] * std::cos(k * phi_total) + b_[p][k] * std::sin(k * phi_total));
    }
    out[p] = std::max(v, 0.0);
  }
  return OutcomeDistribution(labels_, std::move(out));
}

double PhaseResponse::min_no_click() const {
  if (a_.empty()) return 0.0;
  double v = a_[0][0];
  for (std::size_t k = 1; k < a_[0].size(); ++k) v -= std::hypot(a_[0][k], b_[0][k]);
  // Margin for the rounding of the table itself.
  return std::max(0.0, v - 1e-12);
}

std::uint32_t ExperimentResult::window_mask(Window window) const {
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].window == window) mask |= 1u << i;
  return mask;
}

std::uint32_t ExperimentResult::detector_bit(Window window, std::size_t detector) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].window == window && slots[i].detector == detector) return 1u << i;
  throw ValidationError("no detector " + DetectorSlot{window, detector}.label() + " in this experiment");
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto engine = make_engine(config.engine);
  const PhaseResponse response = PhaseResponse::compute(config, *engine, options.build);
  const double sigma = total_jitter_sigma(config.noise);
  const double phi_off = config.phases.phi_off();

  ExperimentResult result;
  result.kind = config.kind;
  result.engine = engine->name();
  result.labels = response.labels();
  result.slots = response.slots();

  PatternSampler::Options sampling;
  sampling.seed = config.seed;
  sampling.workers = options.workers > 0 ? options.workers : config.workers;
  sampling.keep_records = options.keep_records;
  const std::uint64_t trials = options.trials > 0 ? options.trials : config.trials;

  const auto points = config.phase_points();
  for (std::size_t i = 0; i < points.size(); ++i) {
    SettingResult s;
    s.phi_w = points[i].first;
    s.phi_r = points[i].second;
    s.total_phase = s.phi_w + s.phi_r + 2.0 * phi_off;
    s.exact = response.averaged(s.total_phase, sigma);
    if (options.sample) {
      sampling.stream = i;
      if (response.phase_independent() || sigma == 0.0) {
        s.sampled = PatternSampler(s.exact.probabilities()).run(0, trials, sampling);
      } else {
        const double phase = s.total_phase;
        PatternSampler sampler(response.pattern_count(), response.min_no_click(), config.noise.write_phase_jitter_fwhm,
                               config.noise.read_phase_jitter_fwhm,
                               [&response, phase](double jw, double jr, std::vector<double>& p) {
                                 response.evaluate(phase + jw + jr, p);
                               });
        s.sampled = sampler.run(0, trials, sampling);
      }
    }
    result.settings.push_back(std::move(s));
  }
  spdlog::debug("run_experiment: {} settings, {} trials each, engine {}", points.size(), trials, result.engine);
  return result;
}

RateBudget rate_budget(const ExperimentConfig& config) {
  RateBudget b;
  b.repetition_rate = 1.0 / config.repetition_period;
  const DetectionChain chain = DetectionChain::from_noise(config.noise);
  const double eta = 0.5 * (chain.efficiency(0) + chain.efficiency(1));
  const bool connected = InterferometerModel::from_config(config).connected;
  const double p_w = 0.5 * (pulse_probability(config, PulseRole::WriteEarly) +
                            pulse_probability(config, PulseRole::WriteLate));
  const double p_r = 0.5 * (pulse_probability(config, PulseRole::ReadEarly) +
                            pulse_probability(config, PulseRole::ReadLate));

  b.herald_factors = {
      {"write scattering probability", p_w, "mean over the two write pulses"},
      {"write pulses", 2.0, "Early and Late"},
      {"overlap window fraction", 0.5, connected ? "one of the two interferometer paths" : "delayed arm blocked"},
      {"detection efficiency", eta, "coupling x filter x detector, mean over detectors"},
  };
  b.coincidence_factors = {
      {"read scattering probability", p_r, "mean over the two read pulses"},
      {"T1 survival", config.waveguide.t1_survival(config.waveguide.round_trip_time), "one round trip"},
      {"retrieval efficiency", config.waveguide.retrieval_efficiency, "dispersion part of the readout"},
      {"overlap window fraction", 0.5, connected ? "one of the two interferometer paths" : "delayed arm blocked"},
      {"detection efficiency", eta, "coupling x filter x detector, mean over detectors"},
  };
  double heralds = b.repetition_rate;
  for (const auto& f : b.herald_factors) heralds *= f.value;
  double coincidences = heralds;
  for (const auto& f : b.coincidence_factors) coincidences *= f.value;
  b.heralds_per_hour = 3600.0 * heralds;
  b.coincidences_per_hour = 3600.0 * coincidences;
  if (config.noise.detector_efficiency_assumed) b.assumptions.push_back("detector efficiency is an assumed default");
  if (config.noise.dark_count_assumed) b.assumptions.push_back("dark count probability is an assumed default");
  return b;
}

}  // namespace phonon::protocol
