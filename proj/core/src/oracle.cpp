#include "phonon/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "phonon/analysis.hpp"
#include "phonon/model.hpp"
#include "phonon/protocol.hpp"

namespace phonon::oracle {

namespace {

std::string mode_name(std::size_t i) { return "m" + std::to_string(i); }

std::size_t pick(SplitMix64& rng, std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); }

double uniform(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

Check make_check(std::string group, std::string name, double deviation, double tolerance, std::string detail = {}) {
  // NaN deviations fail.
  if (std::isnan(deviation)) deviation = std::numeric_limits<double>::infinity();
  return Check{std::move(group), std::move(name), deviation, tolerance, std::move(detail)};
}

ExperimentConfig noiseless_time_bin(double p_w, double p_r, double phi_off) {
  ExperimentConfig c;
  c.kind = ExperimentKind::TimeBinEntanglement;
  c.trials = 1;
  c.pulses = build_pulse_sequence(c.kind, c.waveguide.round_trip_time, {}).pulses;
  for (auto& p : c.pulses) {
    p.energy = 0.0;
    p.scattering_probability = is_write(p.role) ? p_w : p_r;
  }
  c.phases.set_phi_off(phi_off);
  c.engine.kind = EngineKind::Fock;
  c.engine.truncation = 3;
  return protocol::noiseless(c);
}

}  // namespace

bool Report::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

double Report::max_deviation(std::string_view group) const {
  double m = 0.0;
  for (const auto& c : checks)
    if (group.empty() || c.group == group) m = std::max(m, c.deviation);
  return m;
}

const Check* Report::first_failure() const {
  for (const auto& c : checks)
    if (!c.pass()) return &c;
  return nullptr;
}

Report& Report::operator+=(const Report& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  return *this;
}

RandomCase random_circuit(SplitMix64& rng, const RandomCircuitSpec& spec) {
  RandomCase out;
  const std::size_t modes = spec.min_modes + pick(rng, spec.max_modes - spec.min_modes + 1);
  for (std::size_t m = 0; m < modes; ++m) {
    out.circuit.add_mode(mode_name(m));
    if (rng.uniform() < 0.5) out.circuit.thermal_noise(mode_name(m), uniform(rng, 0.0, spec.max_nbar));
  }
  const std::size_t ops = 3 + pick(rng, 6);
  for (std::size_t k = 0; k < ops; ++k) {
    const std::size_t a = pick(rng, modes);
    std::size_t b = pick(rng, modes - 1);
    if (b >= a) ++b;
    switch (pick(rng, 4)) {
      case 0: out.circuit.squeeze(mode_name(a), mode_name(b), uniform(rng, 0.0, spec.max_p), uniform(rng, 0.0, 2.0 * kPi)); break;
      case 1: out.circuit.beam_splitter(mode_name(a), mode_name(b), rng.uniform(), uniform(rng, 0.0, 2.0 * kPi)); break;
      case 2: out.circuit.phase(mode_name(a), uniform(rng, 0.0, 2.0 * kPi)); break;
      default: out.circuit.loss(mode_name(a), uniform(rng, 0.5, 1.0)); break;
    }
  }
  // Shuffle the modes and deal them into 1..4 detectors of one or two modes each.
  std::vector<std::size_t> order(modes);
  for (std::size_t i = 0; i < modes; ++i) order[i] = i;
  for (std::size_t i = modes; i > 1; --i) std::swap(order[i - 1], order[pick(rng, i)]);
  const std::size_t detectors = 1 + pick(rng, std::min<std::size_t>(4, modes));
  std::size_t next = 0;
  for (std::size_t d = 0; d < detectors && next < modes; ++d) {
    Detector det;
    det.label = "D" + std::to_string(d);
    det.modes.push_back(mode_name(order[next++]));
    if (next < modes && rng.uniform() < 0.3) det.modes.push_back(mode_name(order[next++]));
    det.efficiency = uniform(rng, 0.5, 1.0);
    det.extra_click = uniform(rng, 0.0, 1e-3);
    out.detectors.push_back(std::move(det));
  }
  return out;
}

Report cross_engine(const SuiteOptions& options) {
  Report report;
  const auto fock = make_fock_engine(options.truncation);
  const auto gauss = make_gaussian_engine();
  for (int i = 0; i < options.circuits; ++i) {
    SplitMix64 rng = SplitMix64::for_trial(options.seed, static_cast<std::uint64_t>(i), 0x0c);
    const RandomCase rc = random_circuit(rng, options.spec);
    const auto f = fock->evaluate(rc.circuit, rc.detectors);
    const auto g = gauss->evaluate(rc.circuit, rc.detectors);
    double worst = 0.0;
    std::size_t at = 0;
    for (std::size_t k = 0; k < f.probabilities().size(); ++k) {
      const double d = std::abs(f.probability(static_cast<std::uint32_t>(k)) - g.probability(static_cast<std::uint32_t>(k)));
      if (d > worst || std::isnan(d)) {
        worst = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
        at = k;
      }
    }
    report.checks.push_back(make_check("cross-engine", "random circuit " + std::to_string(i), worst,
                                       options.cross_tolerance,
                                       std::to_string(rc.circuit.peak_mode_count()) + " modes, " +
                                           std::to_string(rc.circuit.size()) + " ops, worst pattern " +
                                           std::to_string(at)));
  }
  return report;
}

Report analytic_limits(const SuiteOptions& options) {
  Report report;
  const double tol = options.analytic_tolerance;

  // Noiseless time-bin correlations at vanishing write probability, where multi-pair terms drop out.
  {
    const double phi_off = kPi / 4.0;
    ExperimentConfig c = noiseless_time_bin(1e-9, 0.04, phi_off);
    std::vector<std::pair<double, double>> expected;
    for (int i = 0; i < 12; ++i)
      for (const double phi_r : {0.0, 0.3, kPi / 2.0}) {
        const double phi_w = 2.0 * kPi * i / 12.0;
        expected.emplace_back(phi_w, phi_r);
        c.sweep.points.emplace_back(phi_w, options.flip_read_phase ? -phi_r : phi_r);
      }
    protocol::RunOptions run;
    run.sample = false;
    const auto result = protocol::run_experiment(c, run);
    double worst_e = 0.0, worst_herald = 0.0;
    std::string where_e, where_h;
    for (std::size_t i = 0; i < result.settings.size(); ++i) {
      const double total = expected[i].first + expected[i].second + 2.0 * phi_off;
      const auto t = analysis::coincidence_table(result, i, protocol::Window::WriteOverlap,
                                                 protocol::Window::ReadOverlap, true, 1.0);
      const double e = analysis::correlation_E(t).value;
      const double de = std::abs(e - std::cos(total));
      if (!(de <= worst_e)) {
        worst_e = std::isnan(de) ? std::numeric_limits<double>::infinity() : de;
        where_e = "phi_w=" + fmt(expected[i].first) + " phi_r=" + fmt(expected[i].second) + " E=" + fmt(e);
      }
      // Conditioned on either write detector, the read detectors split as (1 +- cos)/2 with opposite signs.
      for (int k = 0; k < 2; ++k) {
        const double herald = t.n[k][0] + t.n[k][1];
        const double sign = k == 0 ? 1.0 : -1.0;
        const double dh = std::abs(t.n[k][0] / herald - 0.5 * (1.0 + sign * std::cos(total)));
        if (!(dh <= worst_herald)) {
          worst_herald = std::isnan(dh) ? std::numeric_limits<double>::infinity() : dh;
          where_h = "herald D" + std::to_string(k + 1) + " phi_w=" + fmt(expected[i].first);
        }
      }
    }
    report.checks.push_back(make_check("analytic", "time-bin correlation E = cos(phi_w + phi_r + 2 phi_off)", worst_e, tol, where_e));
    report.checks.push_back(make_check("analytic", "herald-conditioned read splitting", worst_herald, tol, where_h));
  }

  const auto gauss = make_gaussian_engine();
  const auto fock = make_fock_engine(options.truncation);

  // Thermal light split 50:50 onto two threshold detectors.
  for (const double nbar : {0.2, 1e-3}) {
    Circuit c;
    c.add_mode("a").add_mode("v").thermal_noise("a", nbar).beam_splitter("a", "v", 0.5);
    const std::vector<Detector> d = {{"A", {"a"}}, {"B", {"v"}}};
    const auto dist = gauss->evaluate(c, d);
    const double g2 = dist.all_click(3) / (dist.all_click(1) * dist.all_click(2));
    const double q1 = 1.0 / (1.0 + nbar / 2.0);
    const double p11 = 1.0 - 2.0 * q1 + 1.0 / (1.0 + nbar);
    const double exact = p11 / ((1.0 - q1) * (1.0 - q1));
    report.checks.push_back(make_check("analytic", "thermal split click g2 (nbar=" + fmt(nbar) + ")",
                                       std::abs(g2 - exact) / exact, tol, "g2=" + fmt(g2) + " exact=" + fmt(exact)));
  }

  // Two-mode squeezed vacuum at unit efficiency: P(both) = P(each) = p, so g2 = 1/p.
  for (const auto* engine : {gauss.get(), fock.get()}) {
    const double p = 0.01;
    Circuit c;
    c.add_mode("a").add_mode("b").squeeze("a", "b", p, 0.7);
    const auto dist = engine->evaluate(c, {{"A", {"a"}}, {"B", {"b"}}});
    const double g2 = dist.all_click(3) / (dist.all_click(1) * dist.all_click(2));
    report.checks.push_back(make_check("analytic", "two-mode squeezed g2 = 1/p (" + engine->name() + ")",
                                       std::abs(g2 * p - 1.0), tol, "g2=" + fmt(g2)));
  }
  return report;
}

Report run_all(const SuiteOptions& options) {
  Report r = analytic_limits(options);
  r += cross_engine(options);
  return r;
}

}  // namespace phonon::oracle
