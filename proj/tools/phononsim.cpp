// phononsim: run experiments, sweeps, calibrations and oracle checks from config files.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "phonon/config.hpp"
#include "phonon/digest.hpp"
#include "phonon/errors.hpp"
#include "phonon/oracle.hpp"
#include "phonon/protocol.hpp"
#include "phonon/sampler.hpp"
#include "phonon/waveguide.hpp"
#include "phonon/workflow.hpp"
#include "run_output.hpp"

namespace {

using nlohmann::ordered_json;
using phonon::ExperimentConfig;
using phonon::ExperimentKind;
using phonon::kPi;
using phononsim::RunOutput;

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::string engine;
  std::optional<int> truncation;
  std::optional<int> workers;
  std::string out;
  std::vector<std::string> overrides;
  bool exact = false;
};

std::string num(double v) { return fmt::format("{}", v); }

ordered_json to_json(const phonon::analysis::AnalysisResult& r) {
  ordered_json j;
  j["value"] = r.value;
  j["sigma"] = r.sigma;
  j["method"] = r.method;
  if (!r.digest.empty()) j["digest"] = r.digest;
  j["flagged"] = r.flagged;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string output_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("PHONONSIM_OUT_DIR"); env && *env) return env;
  return "phononsim-out";
}

void add_common(CLI::App* sub, Common& c, bool with_config) {
  if (with_config) {
    sub->add_option("--config", c.config, "Experiment config (YAML)")->required();
    sub->add_option("--trials", c.trials, "Trials per phase setting");
    sub->add_option("--engine", c.engine, "Engine")->check(CLI::IsMember({"fock", "gaussian"}));
    sub->add_option("--truncation", c.truncation, "Fock total-excitation cutoff");
    sub->add_option("--workers", c.workers, "Sampler threads");
    sub->add_option("--override", c.overrides, "Dotted-path config override KEY=VALUE (repeatable)");
  }
  sub->add_option("--seed", c.seed, "RNG seed");
  sub->add_option("--out", c.out, "Output directory (default $PHONONSIM_OUT_DIR or ./phononsim-out)");
}

ExperimentConfig load(const Common& c) {
  std::vector<phonon::ConfigOverride> ovs;
  for (const auto& o : c.overrides) ovs.push_back(phonon::ConfigOverride::parse(o));
  ExperimentConfig cfg = phonon::load_config(c.config, ovs);
  if (c.seed) cfg.seed = *c.seed;
  if (c.trials) cfg.trials = *c.trials;
  if (!c.engine.empty()) cfg.engine.kind = c.engine == "fock" ? phonon::EngineKind::Fock : phonon::EngineKind::Gaussian;
  if (c.truncation) cfg.engine.truncation = *c.truncation;
  if (c.workers) cfg.workers = *c.workers;
  cfg.validate();
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Canonical config copy, digests and assumption flags.
void describe(RunOutput& out, const Common& c, const ExperimentConfig& cfg) {
  auto& m = out.manifest();
  m["config_path"] = c.config;
  m["config_file_sha256"] = phonon::sha256_hex(read_file(c.config));
  m["overrides"] = c.overrides;
  m["config_digest"] = phonon::config_digest(cfg);
  m["kind"] = std::string(phonon::to_string(cfg.kind));
  m["engine"] = std::string(phonon::to_string(cfg.engine.kind));
  if (cfg.engine.kind == phonon::EngineKind::Fock) m["truncation"] = cfg.engine.truncation;
  m["seed"] = cfg.seed;
  m["trials"] = cfg.trials;
  m["workers"] = cfg.workers;
  out.write("config.yaml", "config", phonon::serialize_config(cfg));
  if (cfg.noise.detector_efficiency_assumed)
    out.add_assumption(fmt::format("detector efficiency default used ({}, {})", cfg.noise.detector_efficiency[0],
                                   cfg.noise.detector_efficiency[1]));
  if (cfg.noise.dark_count_assumed)
    out.add_assumption(fmt::format("dark count probability default used ({})", cfg.noise.dark_count_prob));
  for (const auto& w : cfg.warnings()) {
    spdlog::warn("{}", w);
    out.add_warning(w);
  }
}

// Runs a command body and writes the manifest with the exit code the process will return.
template <class F>
int finish_with(RunOutput& out, F&& body) {
  try {
    const int code = body();
    out.finish(code);
    return code;
  } catch (const phonon::ValidationError&) {
    out.finish(kExitValidation);
    throw;
  } catch (...) {
    out.finish(kExitRuntime);
    throw;
  }
}

std::string settings_table(const phonon::workflow::Summary& s) {
  std::string t = "# phi_w_pi\tphi_r_pi\ttotal_phase_pi\tE\tE_sigma\tE_exact\n";
  for (const auto& r : s.rows)
    t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.phi_w / kPi, r.phi_r / kPi, r.total_phase / kPi, r.e.value, r.e.sigma,
                     r.exact_e);
  return t;
}

std::string distributions_table(const phonon::protocol::ExperimentResult& result) {
  std::string t = "# setting\tphi_w_pi\tphi_r_pi\tpattern\tclicks\tprobability\tcount\n";
  for (std::size_t i = 0; i < result.settings.size(); ++i) {
    const auto& s = result.settings[i];
    const auto& p = s.exact.probabilities();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const bool sampled = k < s.sampled.counts.size();
      if (p[k] == 0.0 && (!sampled || s.sampled.counts[k] == 0)) continue;
      std::string clicks;
      for (std::size_t d = 0; d < result.labels.size(); ++d)
        if (k >> d & 1u) clicks += (clicks.empty() ? "" : "+") + result.labels[d];
      t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", i, s.phi_w / kPi, s.phi_r / kPi, k, clicks.empty() ? "-" : clicks,
                       p[k], sampled ? std::to_string(s.sampled.counts[k]) : "");
    }
  }
  return t;
}

ordered_json summary_json(const phonon::workflow::Summary& s) {
  ordered_json values = ordered_json::object();
  for (const auto& [name, r] : s.values) values[name] = to_json(r);
  return values;
}

ordered_json run_header(const ExperimentConfig& cfg) {
  ordered_json j;
  j["kind"] = std::string(phonon::to_string(cfg.kind));
  j["engine"] = std::string(phonon::to_string(cfg.engine.kind));
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  return j;
}

void log_values(const phonon::workflow::Summary& s) {
  for (const auto& [name, r] : s.values)
    std::cout << fmt::format("{:<16} {:>14.6g} +- {:<12.3g}{}\n", name, r.value, r.sigma, r.flagged ? "  [" + r.note + "]" : "");
}

int run_thermal(RunOutput& out, const ExperimentConfig& cfg) {
  namespace wg = phonon::waveguide;
  const auto spectrum = wg::spectrum_from_config(cfg);
  const auto delays = wg::grid(0.0, cfg.spectrum.delay_max, cfg.spectrum.delay_step);
  const auto g2 = wg::g2_tau_curve(spectrum, delays);
  const auto rt = wg::extract_round_trip(delays, g2);
  std::ostringstream curve;
  wg::write_curve(curve, delays, g2, "delay_s", "g2");
  out.write("g2_tau.tsv", "curve", curve.str());

  ordered_json res = run_header(cfg);
  res["values"] = {{"g2_zero", g2.front()}, {"round_trip_time", rt.tau}, {"peak_value", rt.peak_value},
                   {"packet_fwhm", rt.packet_fwhm}};
  out.write_json("results.json", "summary", res);
  std::cout << fmt::format("g2(0) = {:.9g}\nround trip = {:.6g} ns (peak {:.6g})\npacket FWHM = {:.6g} ns\n", g2.front(),
                           rt.tau * 1e9, rt.peak_value, rt.packet_fwhm * 1e9);
  return 0;
}

int cmd_simulate(const Common& c, bool records) {
  const ExperimentConfig cfg = load(c);
  RunOutput out(output_dir(c), "simulate");
  return finish_with(out, [&] {
    describe(out, c, cfg);
    if (cfg.kind == ExperimentKind::ThermalG2Tau) return run_thermal(out, cfg);
    {
      phonon::protocol::RunOptions opts;
      opts.sample = !c.exact;
      opts.keep_records = records && !c.exact;
      spdlog::info("running {} ({} settings, {} trials each, {} engine)", phonon::to_string(cfg.kind),
                   cfg.phase_points().size(), c.exact ? 0 : cfg.trials, phonon::to_string(cfg.engine.kind));
      const auto result = phonon::protocol::run_experiment(cfg, opts);
      const auto summary = phonon::workflow::summarize(cfg, result, c.exact);
      ordered_json res = run_header(cfg);
      res["mode"] = c.exact ? "exact" : "sampled";
      res["values"] = summary_json(summary);
      ordered_json rows = ordered_json::array();
      for (const auto& r : summary.rows)
        rows.push_back({{"phi_w", r.phi_w}, {"phi_r", r.phi_r}, {"total_phase", r.total_phase}, {"E", to_json(r.e)},
                        {"E_exact", r.exact_e}});
      res["settings"] = rows;
      out.write_json("results.json", "summary", res);
      if (!summary.rows.empty()) out.write("settings.tsv", "table", settings_table(summary));
      out.write("distributions.tsv", "table", distributions_table(result));
      if (opts.keep_records)
        for (std::size_t i = 0; i < result.settings.size(); ++i) {
          std::ostringstream rec;
          phonon::write_click_records(rec, result.settings[i].sampled.records, result.labels);
          out.write(fmt::format("clicks_{}.tsv", i), "click-records", rec.str());
        }
      log_values(summary);
    }
    return 0;
  });
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw phonon::ValidationError("not a number in list: '" + item + "'");
    }
  }
  return v;
}

struct SweepArgs {
  std::string var = "phi_w";
  std::string values;
  int points = 0;
  std::string phi_r;
};

int sweep_phase(RunOutput& out, const Common& c, ExperimentConfig cfg, const SweepArgs& a) {
  if (cfg.kind == ExperimentKind::DoubleCrossCorrelation || cfg.kind == ExperimentKind::ThermalG2Tau)
    throw phonon::ValidationError("phase sweeps need an interfering experiment (TimeBinEntanglement, BellTest, Calibration)");
  std::vector<double> primary;
  if (a.points > 0)
    for (int i = 0; i < a.points; ++i) primary.push_back(2.0 * i / a.points);
  else
    primary = parse_list(a.values);
  if (primary.empty()) throw phonon::ValidationError("sweep list is empty");
  std::vector<double> second;
  if (a.var == "phi_w") second = a.phi_r.empty() ? std::vector<double>{cfg.phases.phi_r() / kPi} : parse_list(a.phi_r);
  else second = {cfg.phases.phi_w() / kPi};
  if (second.empty()) throw phonon::ValidationError("phi_r list is empty");

  if (cfg.kind == ExperimentKind::BellTest) cfg.kind = ExperimentKind::TimeBinEntanglement;
  cfg.chsh.reset();
  cfg.sweep.points.clear();
  for (double s : second)
    for (double p : primary)
      cfg.sweep.points.emplace_back(a.var == "phi_w" ? p * kPi : s * kPi, a.var == "phi_w" ? s * kPi : p * kPi);
  describe(out, c, cfg);

  phonon::protocol::RunOptions opts;
  opts.sample = !c.exact;
  const auto result = phonon::protocol::run_experiment(cfg, opts);
  const auto summary = phonon::workflow::summarize(cfg, result, c.exact);

  std::string t = "# curve\tphi_w_pi\tphi_r_pi\ttotal_phase_pi\tE\tE_sigma\tE_exact\n";
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    const auto& r = summary.rows[i];
    t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", i / primary.size(), r.phi_w / kPi, r.phi_r / kPi, r.total_phase / kPi,
                     r.e.value, r.e.sigma, r.exact_e);
  }
  out.write("sweep.tsv", "table", t);

  ordered_json res = run_header(cfg);
  res["mode"] = c.exact ? "exact" : "sampled";
  res["sweep_variable"] = a.var;
  ordered_json curves = ordered_json::array();
  for (double s : second) curves.push_back({{a.var == "phi_w" ? "phi_r_pi" : "phi_w_pi", s}});
  res["curves"] = curves;
  res["values"] = summary_json(summary);

  if (a.var == "phi_w" && second.size() == 2 && primary.size() >= 6) {
    std::vector<double> phi;
    std::vector<phonon::analysis::AnalysisResult> e0, e1;
    for (std::size_t i = 0; i < primary.size(); ++i) {
      phi.push_back(primary[i] * kPi);
      e0.push_back(summary.rows[i].e);
      e1.push_back(summary.rows[primary.size() + i].e);
    }
    const auto fit = phonon::analysis::fit_sinusoid_and_choose_phases(phi, e0, e1, second[0] * kPi, second[1] * kPi);
    res["chsh_fit"] = {{"phi_0_pi", fit.phi_0 / kPi},
                       {"phi_0_sigma_pi", fit.phi_0_sigma / kPi},
                       {"amplitude", fit.amplitude},
                       {"phi_w_pi", {fit.settings.phi_w[0] / kPi, fit.settings.phi_w[1] / kPi}},
                       {"phi_r_pi", {fit.settings.phi_r[0] / kPi, fit.settings.phi_r[1] / kPi}},
                       {"expected_S", fit.expected_S}};
    std::cout << fmt::format("fit: phi_0 = {:.4f} pi, amplitude {:.4f}, expected S {:.4f}\n", fit.phi_0 / kPi,
                             fit.amplitude, fit.expected_S);
  }
  out.write_json("results.json", "summary", res);
  log_values(summary);
  return 0;
}

int sweep_energy(RunOutput& out, const Common& c, ExperimentConfig cfg, const SweepArgs& a) {
  const bool write = a.var == "write_energy";
  const std::vector<double> energies = parse_list(a.values);
  if (energies.empty()) throw phonon::ValidationError("sweep list is empty");
  describe(out, c, cfg);

  std::vector<std::string> columns;
  std::vector<std::pair<double, phonon::workflow::Summary>> rows;
  for (double e : energies) {
    ExperimentConfig run = cfg;
    double p = 0.0;
    for (auto& pulse : run.pulses) {
      if (phonon::is_write(pulse.role) != write) continue;
      pulse.energy = e;
      pulse.scattering_probability = phonon::scattering_probability_from_energy(
          e, phonon::process_of(pulse.role), run.calibration, run.perturbative_guard);
      p = pulse.scattering_probability;
    }
    run.validate();
    phonon::protocol::RunOptions opts;
    opts.sample = !c.exact;
    auto summary = phonon::workflow::summarize(run, phonon::protocol::run_experiment(run, opts), c.exact);
    for (const auto& [name, r] : summary.values)
      if (std::find(columns.begin(), columns.end(), name) == columns.end()) columns.push_back(name);
    spdlog::info("{} = {} J (p = {})", a.var, e, p);
    rows.emplace_back(p, std::move(summary));
  }

  std::string t = "# " + a.var + "\tp";
  for (const auto& col : columns) t += "\t" + col + "\t" + col + "_sigma";
  t += "\n";
  ordered_json list = ordered_json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t += num(energies[i]) + "\t" + num(rows[i].first);
    for (const auto& col : columns) {
      if (rows[i].second.has(col)) {
        const auto& r = rows[i].second.get(col);
        t += "\t" + num(r.value) + "\t" + num(r.sigma);
      } else {
        t += "\tnan\tnan";
      }
    }
    t += "\n";
    list.push_back({{"energy", energies[i]}, {"p", rows[i].first}, {"values", summary_json(rows[i].second)}});
  }
  out.write("sweep.tsv", "table", t);
  ordered_json res = run_header(cfg);
  res["mode"] = c.exact ? "exact" : "sampled";
  res["sweep_variable"] = a.var;
  res["rows"] = list;
  out.write_json("results.json", "summary", res);
  std::cout << t;
  return 0;
}

int cmd_sweep(const Common& c, const SweepArgs& a) {
  static const std::vector<std::string> vars = {"phi_w", "phi_r", "write_energy", "read_energy"};
  if (std::find(vars.begin(), vars.end(), a.var) == vars.end())
    throw phonon::ValidationError("unknown sweep variable '" + a.var + "' (phi_w, phi_r, write_energy, read_energy)");
  if (a.points > 0 && (a.var != "phi_w" && a.var != "phi_r"))
    throw phonon::ValidationError("--points applies to phase sweeps only");
  if (a.points > 0 && !a.values.empty()) throw phonon::ValidationError("give either --points or --values");
  const ExperimentConfig cfg = load(c);
  RunOutput out(output_dir(c), "sweep");
  return finish_with(out, [&] {
    return a.var == "phi_w" || a.var == "phi_r" ? sweep_phase(out, c, cfg, a) : sweep_energy(out, c, cfg, a);
  });
}

int cmd_calibrate(const Common& c, int points, bool verify) {
  const ExperimentConfig cfg = load(c);
  RunOutput out(output_dir(c), "calibrate");
  return finish_with(out, [&] {
    describe(out, c, cfg);
    const auto run = phonon::workflow::calibrate_chsh(cfg, points, !c.exact, c.exact ? cfg.trials : 0);
    const auto& fit = run.fit;

    std::string t = "# phi_w_pi\tE_r0\tE_r0_sigma\tfit_r0\tE_r1\tE_r1_sigma\tfit_r1\n";
    for (std::size_t i = 0; i < run.phi_w.size(); ++i)
      t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", run.phi_w[i] / kPi, run.e0[i].value, run.e0[i].sigma,
                       fit.curve0(run.phi_w[i]), run.e1[i].value, run.e1[i].sigma, fit.curve1(run.phi_w[i]));
    out.write("calibration.tsv", "table", t);
    out.write("chsh_settings.yaml", "config-fragment",
              fmt::format("phases:\n  chsh:\n    phi_w: [{}, {}]\n    phi_r: [{}, {}]\n", fit.settings.phi_w[0] / kPi,
                          fit.settings.phi_w[1] / kPi, fit.settings.phi_r[0] / kPi, fit.settings.phi_r[1] / kPi));

    ordered_json res = run_header(cfg);
    res["mode"] = c.exact ? "exact" : "sampled";
    res["points"] = points;
    res["phi_0_pi"] = fit.phi_0 / kPi;
    res["phi_0_sigma_pi"] = fit.phi_0_sigma / kPi;
    res["amplitude"] = fit.amplitude;
    res["offsets"] = {fit.curve0.offset, fit.curve1.offset};
    res["chsh"] = {{"phi_w_pi", {fit.settings.phi_w[0] / kPi, fit.settings.phi_w[1] / kPi}},
                   {"phi_r_pi", {fit.settings.phi_r[0] / kPi, fit.settings.phi_r[1] / kPi}}};
    res["expected_S"] = fit.expected_S;
    res["epsilon_pi"] = {fit.epsilon[0] / kPi, fit.epsilon[1] / kPi};
    std::cout << fmt::format("phi_0 = {:.5f} +- {:.5f} pi, amplitude {:.4f}\n", fit.phi_0 / kPi, fit.phi_0_sigma / kPi,
                             fit.amplitude)
              << fmt::format("chsh: phi_w = ({:.5f}, {:.5f}) pi, phi_r = ({:.3f}, {:.3f}) pi, expected S {:.4f}\n",
                             fit.settings.phi_w[0] / kPi, fit.settings.phi_w[1] / kPi, fit.settings.phi_r[0] / kPi,
                             fit.settings.phi_r[1] / kPi, fit.expected_S);

    if (cfg.kind == ExperimentKind::Calibration) {
      std::string sb = "# role\tn_th\tprobe_p\tstokes_counts\tanti_stokes_counts\ttrials\tn_est\tn_sigma\n";
      ordered_json list = ordered_json::array();
      for (const auto& s : phonon::workflow::simulate_sideband_asymmetry(cfg, cfg.trials)) {
        const std::string role(phonon::to_string(s.role));
        sb += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", role, s.n_th, s.probe_p, s.stokes_counts, s.anti_stokes_counts,
                          s.trials, s.estimate.value, s.estimate.sigma);
        list.push_back({{"role", role}, {"n_th", s.n_th}, {"estimate", to_json(s.estimate)}});
        std::cout << fmt::format("n_th {:<10} configured {:.4f}, estimated {:.4f} +- {:.4f}\n", role, s.n_th,
                                 s.estimate.value, s.estimate.sigma);
      }
      out.write("sideband.tsv", "table", sb);
      res["sideband"] = list;
    }

    if (verify) {
      const auto bell = phonon::workflow::with_chsh(cfg, fit.settings);
      phonon::protocol::RunOptions opts;
      opts.sample = !c.exact;
      const auto summary = phonon::workflow::summarize(bell, phonon::protocol::run_experiment(bell, opts), c.exact);
      res["verification"] = summary_json(summary);
      out.write("settings.tsv", "table", settings_table(summary));
      log_values(summary);
    }
    out.write_json("results.json", "summary", res);
    return 0;
  });
}

int cmd_rate_budget(const Common& c) {
  const ExperimentConfig cfg = load(c);
  RunOutput out(output_dir(c), "rate-budget");
  return finish_with(out, [&] {
  describe(out, c, cfg);
  const auto b = phonon::protocol::rate_budget(cfg);
  std::string t = "# stage\tfactor\tvalue\tnote\n";
  ordered_json res = run_header(cfg);
  res["repetition_rate"] = b.repetition_rate;
  for (const auto& [stage, list] : {std::pair{"herald", &b.herald_factors}, std::pair{"coincidence", &b.coincidence_factors}}) {
    ordered_json arr = ordered_json::array();
    for (const auto& f : *list) {
      t += fmt::format("{}\t{}\t{}\t{}\n", stage, f.name, f.value, f.note);
      arr.push_back({{"name", f.name}, {"value", f.value}, {"note", f.note}});
    }
    res[std::string(stage) + "_factors"] = arr;
  }
  res["heralds_per_hour"] = b.heralds_per_hour;
  res["coincidences_per_hour"] = b.coincidences_per_hour;
  res["assumptions"] = b.assumptions;
  for (const auto& a : b.assumptions) out.add_assumption(a);
  out.write("rate_budget.tsv", "table", t);
  out.write_json("results.json", "summary", res);
  std::cout << t
            << fmt::format("repetition rate {:.6g} Hz\nheralds/hour {:.6g}\ncoincidences/hour {:.6g}\n", b.repetition_rate,
                           b.heralds_per_hour, b.coincidences_per_hour);
  return 0;
  });
}

int cmd_oracle(const Common& c, phonon::oracle::SuiteOptions opts) {
  if (c.seed) opts.seed = *c.seed;
  if (opts.circuits < 0) throw phonon::ValidationError("--circuits must be >= 0");
  RunOutput out(output_dir(c), "oracle-check");
  out.manifest()["seed"] = opts.seed;
  out.manifest()["engine"] = "fock+gaussian";
  out.manifest()["truncation"] = opts.truncation;
  out.manifest()["circuits"] = opts.circuits;
  if (opts.flip_read_phase) out.add_assumption("read-phase sign deliberately flipped (mutation check)");

  return finish_with(out, [&] {
  const auto report = phonon::oracle::run_all(opts);
  std::string t = "# group\tcheck\tdeviation\ttolerance\tpass\tdetail\n";
  for (const auto& ch : report.checks)
    t += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", ch.group, ch.name, ch.deviation, ch.tolerance, ch.pass() ? 1 : 0, ch.detail);
  out.write("oracle.tsv", "table", t);

  ordered_json res;
  res["seed"] = opts.seed;
  res["truncation"] = opts.truncation;
  res["circuits"] = opts.circuits;
  res["pass"] = report.pass();
  res["max_deviation"] = {{"analytic", report.max_deviation("analytic")},
                          {"cross-engine", report.max_deviation("cross-engine")}};
  for (const auto& ch : report.checks)
    if (ch.group == "analytic") std::cout << fmt::format("{:<4} {:<60} {:.3e} (tol {:.0e})\n", ch.pass() ? "ok" : "FAIL", ch.name, ch.deviation, ch.tolerance);
  std::cout << fmt::format("cross-engine: {} circuits, max |dP| = {:.3e} (tol {:.0e})\n", opts.circuits,
                           report.max_deviation("cross-engine"), opts.cross_tolerance);
  if (const auto* f = report.first_failure()) {
    res["first_failure"] = {{"group", f->group}, {"check", f->name}, {"deviation", f->deviation}, {"detail", f->detail}};
    std::cerr << fmt::format("oracle check failed: {} / {}: deviation {:.3e} > {:.0e} ({})\n", f->group, f->name,
                             f->deviation, f->tolerance, f->detail);
  }
  out.write_json("results.json", "summary", res);
  return report.pass() ? 0 : kExitRuntime;
  });
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("phononsim"));
  CLI::App app{"Optomechanical time-bin entanglement simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  Common common;
  bool records = false;
  auto* simulate = app.add_subcommand("simulate", "Run the experiment described by a config");
  add_common(simulate, common, true);
  simulate->add_flag("--exact", common.exact, "Exact distributions only, no sampling");
  simulate->add_flag("--records", records, "Write per-trial click records");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Sweep a phase or a pulse energy");
  add_common(sweep, common, true);
  sweep->add_option("--var", sweep_args.var, "phi_w, phi_r, write_energy or read_energy")->capture_default_str();
  sweep->add_option("--values", sweep_args.values, "Comma-separated values (phases in units of pi, energies in J)");
  sweep->add_option("--points", sweep_args.points, "Uniform phase sweep over [0, 2pi)");
  sweep->add_option("--phi-r", sweep_args.phi_r, "Comma-separated phi_r curves for a phi_w sweep (units of pi)");
  sweep->add_flag("--exact", common.exact, "Exact distributions only, no sampling");

  int points = 12;
  bool verify = false;
  auto* calibrate = app.add_subcommand("calibrate", "Phase sweep at phi_r in {0, pi/2}, fit, and emit CHSH settings");
  add_common(calibrate, common, true);
  calibrate->add_option("--points", points, "phi_w points per curve")->capture_default_str();
  calibrate->add_flag("--exact", common.exact, "Fit the exact correlations");
  calibrate->add_flag("--verify", verify, "Run the Bell test at the chosen settings");

  phonon::oracle::SuiteOptions oracle_opts;
  auto* oracle = app.add_subcommand("oracle-check", "Cross-engine and analytic-limit checks");
  add_common(oracle, common, false);
  oracle->add_option("--circuits", oracle_opts.circuits, "Random circuits")->capture_default_str();
  oracle->add_option("--truncation", oracle_opts.truncation, "Fock cutoff")->capture_default_str();
  oracle->add_option("--tolerance", oracle_opts.cross_tolerance, "Cross-engine tolerance")->capture_default_str();
  oracle->add_flag("--flip-read-phase", oracle_opts.flip_read_phase, "Flip the read-phase sign (must fail)");

  auto* rate = app.add_subcommand("rate-budget", "Herald and coincidence rate estimate");
  add_common(rate, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*simulate) return cmd_simulate(common, records);
    if (*sweep) return cmd_sweep(common, sweep_args);
    if (*calibrate) return cmd_calibrate(common, points, verify);
    if (*oracle) return cmd_oracle(common, oracle_opts);
    if (*rate) return cmd_rate_budget(common);
  } catch (const phonon::ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitValidation;
  } catch (const phonon::NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
