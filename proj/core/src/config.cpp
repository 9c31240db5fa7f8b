#include "phonon/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "phonon/digest.hpp"
#include "phonon/errors.hpp"

namespace phonon {

namespace {

std::string where(const YAML::Node& node, std::string_view source) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) return std::string(source);
  return std::string(source) + ":" + std::to_string(mark.line + 1);
}

// Reads one YAML mapping, remembering which keys were consumed so leftovers are reported.
class MapReader {
public:
  MapReader(const YAML::Node& node, std::string path, std::string_view source)
      : node_(node), path_(std::move(path)), source_(source) {
    if (!node_.IsMap()) fail(node_, "expected a mapping");
  }

  bool has(const std::string& key) const { return node_[key].IsDefined() && !node_[key].IsNull(); }

  YAML::Node child(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  YAML::Node required(const std::string& key) {
    if (!has(key)) fail(node_, "missing required key '" + key + "'");
    return child(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return as<T>(child(key), key);
  }

  template <class T>
  T get_required(const std::string& key) {
    return as<T>(required(key), key);
  }

  template <class T>
  T as(const YAML::Node& n, const std::string& key) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "field '" + field(key) + "' has an invalid value");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& message) const {
    throw ValidationError(where(n, source_) + ": " + (path_.empty() ? "" : path_ + ": ") + message);
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, "unknown key '" + field(key) + "'");
    }
  }

  std::string_view source() const { return source_; }

private:
  YAML::Node node_;
  std::string path_;
  std::string_view source_;
  std::set<std::string> used_;
};

template <std::size_t N>
std::array<double, N> read_array(MapReader& r, const std::string& key, std::array<double, N> fallback,
                                 bool* present = nullptr) {
  if (present) *present = r.has(key);
  if (!r.has(key)) {
    r.child(key);
    return fallback;
  }
  const YAML::Node n = r.child(key);
  if (n.IsScalar()) {
    std::array<double, N> out{};
    out.fill(r.as<double>(n, key));
    return out;
  }
  const auto v = r.as<std::vector<double>>(n, key);
  if (v.size() != N) r.fail(n, "field '" + r.field(key) + "' needs " + std::to_string(N) + " entries");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::vector<std::pair<double, double>> read_pairs(MapReader& r, const YAML::Node& n, const std::string& key,
                                                  double scale) {
  std::vector<std::pair<double, double>> out;
  for (const auto& v : r.as<std::vector<std::vector<double>>>(n, key)) {
    if (v.size() != 2) r.fail(n, "field '" + r.field(key) + "' needs [a, b] pairs");
    out.emplace_back(v[0] * scale, v[1] * scale);
  }
  return out;
}

void apply_override(YAML::Node& root, const ConfigOverride& ov) {
  std::vector<std::string> parts;
  std::stringstream ss(ov.path);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  if (parts.empty() || std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.empty(); }))
    throw ValidationError("override: malformed key '" + ov.path + "'");

  YAML::Node value;
  try {
    value = YAML::Load(ov.value);
  } catch (const YAML::Exception& e) {
    throw ValidationError("override " + ov.path + ": cannot parse value '" + ov.value + "'");
  }

  // yaml-cpp nodes are handles, so reassigning a local would rebind rather than write through.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node cur = chain.back();
    YAML::Node next;
    if (cur.IsSequence()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(parts[i]);
      } catch (...) {
        throw ValidationError("override " + ov.path + ": '" + parts[i] + "' is not a sequence index");
      }
      if (idx >= cur.size()) throw ValidationError("override " + ov.path + ": index out of range");
      next = cur[idx];
    } else {
      if (!cur[parts[i]].IsDefined()) throw ValidationError("override " + ov.path + ": no key '" + parts[i] + "'");
      next = cur[parts[i]];
    }
    chain.push_back(next);
  }
  YAML::Node parent = chain.back();
  const std::string& leaf = parts.back();
  if (parent.IsSequence()) {
    std::size_t idx = 0;
    try {
      idx = std::stoul(leaf);
    } catch (...) {
      throw ValidationError("override " + ov.path + ": '" + leaf + "' is not a sequence index");
    }
    if (idx >= parent.size()) throw ValidationError("override " + ov.path + ": index out of range");
    parent[idx] = value;
  } else {
    parent[leaf] = value;
  }
}

PhaseSweep read_sweep(MapReader& phases, const YAML::Node& n, double phi_r_default) {
  PhaseSweep sweep;
  if (n.IsSequence()) {
    sweep.points = read_pairs(phases, n, "sweep", kPi);
    return sweep;
  }
  MapReader r(n, "phases.sweep", phases.source());
  const auto ws = r.get_required<std::vector<double>>("phi_w");
  const auto rs = r.get<std::vector<double>>("phi_r", {phi_r_default / kPi});
  r.finish();
  for (double pr : rs)
    for (double pw : ws) sweep.points.emplace_back(pw * kPi, pr * kPi);
  if (sweep.points.empty()) r.fail(n, "sweep list is empty");
  return sweep;
}

ExperimentConfig build(const YAML::Node& root, std::string_view source) {
  MapReader top(root, "", source);
  ExperimentConfig c;
  c.kind = parse_experiment_kind(top.get_required<std::string>("kind"));

  {
    const YAML::Node n = top.required("engine");
    if (n.IsScalar()) {
      c.engine.kind = parse_engine_kind(top.as<std::string>(n, "engine"));
    } else {
      MapReader r(n, "engine", source);
      c.engine.kind = parse_engine_kind(r.get_required<std::string>("type"));
      c.engine.truncation = r.get("truncation", c.engine.truncation);
      r.finish();
    }
  }
  {
    const YAML::Node n = top.required("trials");
    const auto v = top.as<double>(n, "trials");
    if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) top.fail(n, "trials must be a non-negative integer");
    c.trials = static_cast<std::uint64_t>(v);
  }
  c.seed = top.get_required<std::uint64_t>("seed");
  c.workers = top.get("workers", c.workers);
  c.repetition_period = top.get("repetition_period", c.repetition_period);
  c.perturbative_guard = top.get("perturbative_guard", c.perturbative_guard);
  c.thermal_injection_epsilon = top.get("thermal_injection_epsilon", c.thermal_injection_epsilon);

  {
    MapReader r(top.required("cavity"), "cavity", source);
    c.cavity.wavelength = r.get("wavelength", c.cavity.wavelength);
    c.cavity.kappa = r.get("kappa", c.cavity.kappa);
    c.cavity.kappa_i = r.get("kappa_i", c.cavity.kappa_i);
    c.cavity.g0 = r.get("g0", c.cavity.g0);
    c.cavity.mech_frequency = r.get("mech_frequency", c.cavity.mech_frequency);
    r.finish();
  }
  {
    MapReader r(top.required("waveguide"), "waveguide", source);
    c.waveguide.round_trip_time = r.get_required<double>("round_trip_time");
    c.waveguide.group_velocity = r.get("group_velocity", c.waveguide.group_velocity);
    c.waveguide.length = r.get("length", c.waveguide.length);
    c.waveguide.t1 = r.get("t1", c.waveguide.t1);
    c.waveguide.retrieval_efficiency = r.get("retrieval_efficiency", c.waveguide.retrieval_efficiency);
    r.finish();
  }
  if (top.has("calibration")) {
    MapReader r(top.child("calibration"), "calibration", source);
    if (r.has("write")) c.calibration.write = read_pairs(r, r.child("write"), "write", 1.0);
    if (r.has("read")) c.calibration.read = read_pairs(r, r.child("read"), "read", 1.0);
    r.finish();
  } else {
    top.child("calibration");
  }

  {
    const YAML::Node list = top.required("pulses");
    if (!list.IsSequence()) top.fail(list, "pulses must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      MapReader r(list[i], "pulses." + std::to_string(i), source);
      PulseSpec p;
      p.role = parse_pulse_role(r.get_required<std::string>("role"));
      p.detuning = is_write(p.role) ? Detuning::Blue : Detuning::Red;
      if (r.has("detuning")) {
        const auto d = r.get_required<std::string>("detuning");
        if (d != "blue" && d != "red") r.fail(list[i], "detuning must be blue or red");
        p.detuning = d == "blue" ? Detuning::Blue : Detuning::Red;
      }
      p.center_time = r.get("center_time", static_cast<double>(index_of(p.role)) * c.waveguide.round_trip_time / 2.0);
      p.duration_fwhm = r.get("duration_fwhm", p.duration_fwhm);
      p.energy = r.get("energy", 0.0);
      if (r.has("scattering_probability")) {
        p.scattering_probability = r.get_required<double>("scattering_probability");
      } else {
        r.child("scattering_probability");
        p.scattering_probability =
            scattering_probability_from_energy(p.energy, process_of(p.role), c.calibration, c.perturbative_guard);
      }
      r.finish();
      c.pulses.push_back(p);
    }
  }

  {
    MapReader r(top.required("phases"), "phases", source);
    const double w = r.get("phi_w", 0.0) * kPi;
    const double rr = r.get("phi_r", 0.0) * kPi;
    const double off = r.get("phi_off", 0.0) * kPi;
    c.phases = PhaseSettings(w, rr, off);
    if (r.has("sweep")) c.sweep = read_sweep(r, r.child("sweep"), rr);
    else r.child("sweep");
    if (r.has("chsh")) {
      MapReader q(r.child("chsh"), "phases.chsh", source);
      ChshSettings s;
      s.phi_w = read_array<2>(q, "phi_w", {0.0, 0.0});
      s.phi_r = read_array<2>(q, "phi_r", {0.0, 0.5});
      for (auto* a : {&s.phi_w, &s.phi_r})
        for (double& v : *a) v *= kPi;
      q.finish();
      c.chsh = s;
    } else {
      r.child("chsh");
      if (c.kind == ExperimentKind::BellTest) c.chsh = default_chsh_settings(off);
    }
    r.finish();
  }

  {
    MapReader r(top.required("noise"), "noise", source);
    NoiseModel& n = c.noise;
    if (r.has("thermal_schedule")) {
      const YAML::Node ts = r.child("thermal_schedule");
      if (ts.IsMap()) {
        MapReader q(ts, "noise.thermal_schedule", source);
        for (PulseRole role : kPulseRoles) {
          const std::string key(to_string(role));
          if (q.has(key)) n.thermal_schedule.push_back({role, q.get_required<double>(key)});
          else q.child(key);
        }
        q.finish();
      } else if (ts.IsSequence()) {
        const auto v = r.as<std::vector<double>>(ts, "thermal_schedule");
        if (v.size() != 4) r.fail(ts, "thermal_schedule list needs one entry per pulse (4)");
        for (PulseRole role : kPulseRoles) n.thermal_schedule.push_back({role, v[index_of(role)]});
      } else {
        r.fail(ts, "thermal_schedule must be a mapping or a list");
      }
    } else {
      r.child("thermal_schedule");
    }
    n.interferometer_visibility = r.get("interferometer_visibility", n.interferometer_visibility);
    n.splitting_asymmetry = r.get("splitting_asymmetry", n.splitting_asymmetry);
    n.write_phase_jitter_fwhm = r.get("write_phase_jitter_fwhm", 0.0) * kPi;
    n.read_phase_jitter_fwhm = r.get("read_phase_jitter_fwhm", 0.0) * kPi;
    bool present = false;
    n.detector_efficiency = read_array<2>(r, "detector_efficiency", n.detector_efficiency, &present);
    n.detector_efficiency_assumed = !present;
    n.dark_count_assumed = !r.has("dark_count_prob");
    n.dark_count_prob = r.get("dark_count_prob", n.dark_count_prob);
    if (r.has("leakage")) {
      MapReader q(r.child("leakage"), "noise.leakage", source);
      n.leakage_prob[0] = read_array<2>(q, "write", n.leakage_prob[0]);
      n.leakage_prob[1] = read_array<2>(q, "read", n.leakage_prob[1]);
      q.finish();
    } else {
      r.child("leakage");
    }
    n.coupling_efficiency = r.get("coupling_efficiency", n.coupling_efficiency);
    n.filter_pulse_efficiency = read_array<2>(r, "filter_pulse_efficiency", n.filter_pulse_efficiency);
    r.finish();
  }

  if (top.has("spectrum")) {
    MapReader r(top.child("spectrum"), "spectrum", source);
    SpectrumSource& s = c.spectrum;
    s.file = r.get("file", s.file);
    s.fsr_mean = r.get("fsr_mean", s.fsr_mean);
    s.fsr_std = r.get("fsr_std", s.fsr_std);
    s.mode_count = r.get("mode_count", s.mode_count);
    s.envelope_fwhm = r.get("envelope_fwhm", s.envelope_fwhm);
    s.delay_max = r.get("delay_max", s.delay_max);
    s.delay_step = r.get("delay_step", s.delay_step);
    r.finish();
  } else {
    top.child("spectrum");
  }

  top.finish();
  return c;
}

void emit_pairs(YAML::Emitter& out, const std::vector<std::pair<double, double>>& pairs, double scale) {
  out << YAML::BeginSeq;
  for (const auto& [a, b] : pairs) out << YAML::Flow << YAML::BeginSeq << a / scale << b / scale << YAML::EndSeq;
  out << YAML::EndSeq;
}

template <std::size_t N>
void emit_array(YAML::Emitter& out, const std::array<double, N>& a) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double v : a) out << v;
  out << YAML::EndSeq;
}

}  // namespace

ConfigOverride ConfigOverride::parse(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ValidationError("override must be KEY=VALUE: " + std::string(text));
  return {std::string(text.substr(0, eq)), std::string(text.substr(eq + 1))};
}

ExperimentConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides,
                              std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ValidationError(std::string(source) + ":" + std::to_string(e.mark.line + 1) + ": parse error: " + e.msg);
  }
  if (!root.IsMap()) throw ValidationError(std::string(source) + ": top level must be a mapping");
  for (const auto& ov : overrides) apply_override(root, ov);
  const auto with_source = [&](const ValidationError& e) {
    const std::string what = e.what();
    return what.rfind(std::string(source), 0) == 0 ? e : ValidationError(std::string(source) + ": " + what);
  };
  ExperimentConfig c;
  try {
    c = build(root, source);
    c.validate();
  } catch (const ValidationError& e) {
    throw with_source(e);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<ConfigOverride>& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, path);
}

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(c.kind));
  out << YAML::Key << "engine" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "type" << YAML::Value
      << std::string(to_string(c.engine.kind)) << YAML::Key << "truncation" << YAML::Value << c.engine.truncation
      << YAML::EndMap;
  out << YAML::Key << "trials" << YAML::Value << c.trials;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "workers" << YAML::Value << c.workers;
  out << YAML::Key << "repetition_period" << YAML::Value << c.repetition_period;
  out << YAML::Key << "perturbative_guard" << YAML::Value << c.perturbative_guard;
  out << YAML::Key << "thermal_injection_epsilon" << YAML::Value << c.thermal_injection_epsilon;

  out << YAML::Key << "cavity" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "wavelength" << YAML::Value << c.cavity.wavelength;
  out << YAML::Key << "kappa" << YAML::Value << c.cavity.kappa;
  out << YAML::Key << "kappa_i" << YAML::Value << c.cavity.kappa_i;
  out << YAML::Key << "g0" << YAML::Value << c.cavity.g0;
  out << YAML::Key << "mech_frequency" << YAML::Value << c.cavity.mech_frequency;
  out << YAML::EndMap;

  out << YAML::Key << "waveguide" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "round_trip_time" << YAML::Value << c.waveguide.round_trip_time;
  out << YAML::Key << "group_velocity" << YAML::Value << c.waveguide.group_velocity;
  out << YAML::Key << "length" << YAML::Value << c.waveguide.length;
  out << YAML::Key << "t1" << YAML::Value << c.waveguide.t1;
  out << YAML::Key << "retrieval_efficiency" << YAML::Value << c.waveguide.retrieval_efficiency;
  out << YAML::EndMap;

  out << YAML::Key << "calibration" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "write" << YAML::Value;
  emit_pairs(out, c.calibration.write, 1.0);
  out << YAML::Key << "read" << YAML::Value;
  emit_pairs(out, c.calibration.read, 1.0);
  out << YAML::EndMap;

  out << YAML::Key << "pulses" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.pulses) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "role" << YAML::Value << std::string(to_string(p.role));
    out << YAML::Key << "center_time" << YAML::Value << p.center_time;
    out << YAML::Key << "duration_fwhm" << YAML::Value << p.duration_fwhm;
    out << YAML::Key << "energy" << YAML::Value << p.energy;
    out << YAML::Key << "scattering_probability" << YAML::Value << p.scattering_probability;
    out << YAML::Key << "detuning" << YAML::Value << std::string(to_string(p.detuning));
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "phases" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "phi_w" << YAML::Value << c.phases.phi_w() / kPi;
  out << YAML::Key << "phi_r" << YAML::Value << c.phases.phi_r() / kPi;
  out << YAML::Key << "phi_off" << YAML::Value << c.phases.phi_off() / kPi;
  if (!c.sweep.points.empty()) {
    out << YAML::Key << "sweep" << YAML::Value;
    emit_pairs(out, c.sweep.points, kPi);
  }
  if (c.chsh) {
    out << YAML::Key << "chsh" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "phi_w" << YAML::Value;
    emit_array<2>(out, {c.chsh->phi_w[0] / kPi, c.chsh->phi_w[1] / kPi});
    out << YAML::Key << "phi_r" << YAML::Value;
    emit_array<2>(out, {c.chsh->phi_r[0] / kPi, c.chsh->phi_r[1] / kPi});
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  const NoiseModel& n = c.noise;
  out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "thermal_schedule" << YAML::Value << YAML::BeginMap;
  for (const auto& step : n.thermal_schedule)
    out << YAML::Key << std::string(to_string(step.after_pulse)) << YAML::Value << step.n_th;
  out << YAML::EndMap;
  out << YAML::Key << "interferometer_visibility" << YAML::Value << n.interferometer_visibility;
  out << YAML::Key << "splitting_asymmetry" << YAML::Value << n.splitting_asymmetry;
  out << YAML::Key << "write_phase_jitter_fwhm" << YAML::Value << n.write_phase_jitter_fwhm / kPi;
  out << YAML::Key << "read_phase_jitter_fwhm" << YAML::Value << n.read_phase_jitter_fwhm / kPi;
  if (!n.detector_efficiency_assumed) {
    out << YAML::Key << "detector_efficiency" << YAML::Value;
    emit_array(out, n.detector_efficiency);
  }
  if (!n.dark_count_assumed) out << YAML::Key << "dark_count_prob" << YAML::Value << n.dark_count_prob;
  out << YAML::Key << "leakage" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "write" << YAML::Value;
  emit_array(out, n.leakage_prob[0]);
  out << YAML::Key << "read" << YAML::Value;
  emit_array(out, n.leakage_prob[1]);
  out << YAML::EndMap;
  out << YAML::Key << "coupling_efficiency" << YAML::Value << n.coupling_efficiency;
  out << YAML::Key << "filter_pulse_efficiency" << YAML::Value;
  emit_array(out, n.filter_pulse_efficiency);
  out << YAML::EndMap;

  const SpectrumSource& s = c.spectrum;
  out << YAML::Key << "spectrum" << YAML::Value << YAML::BeginMap;
  if (!s.file.empty()) out << YAML::Key << "file" << YAML::Value << s.file;
  out << YAML::Key << "fsr_mean" << YAML::Value << s.fsr_mean;
  out << YAML::Key << "fsr_std" << YAML::Value << s.fsr_std;
  out << YAML::Key << "mode_count" << YAML::Value << s.mode_count;
  out << YAML::Key << "envelope_fwhm" << YAML::Value << s.envelope_fwhm;
  out << YAML::Key << "delay_max" << YAML::Value << s.delay_max;
  out << YAML::Key << "delay_step" << YAML::Value << s.delay_step;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_digest(const ExperimentConfig& config) { return sha256_hex(serialize_config(config)); }

}  // namespace phonon
