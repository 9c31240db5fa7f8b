#include "phonon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "phonon/digest.hpp"
#include "phonon/errors.hpp"
#include "phonon/numeric.hpp"

namespace phonon::analysis {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Values>
std::string digest_of(const Values&... values) {
  std::ostringstream s;
  s.precision(17);
  ((s << values << ';'), ...);
  return sha256_hex(s.str());
}

std::string digest_of_vectors(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& c) {
  std::ostringstream s;
  s.precision(17);
  for (const auto* v : {&a, &b, &c}) {
    for (double x : *v) s << x << ',';
    s << ';';
  }
  return sha256_hex(s.str());
}

AnalysisResult flagged(std::string method, std::string note) {
  AnalysisResult r;
  r.value = kNaN;
  r.sigma = kNaN;
  r.method = std::move(method);
  r.flagged = true;
  r.note = std::move(note);
  return r;
}

// a exp(-k t); parameters (a, k).
struct DecayFunctor : Eigen::DenseFunctor<double> {
  const std::vector<double>& t;
  const std::vector<double>& y;
  const std::vector<double>& w;
  DecayFunctor(const std::vector<double>& t_, const std::vector<double>& y_, const std::vector<double>& w_)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(t_.size())), t(t_), y(y_), w(w_) {}
  int operator()(const InputType& p, ValueType& r) const {
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = w[i] * (p[0] * std::exp(-p[1] * t[i]) - y[i]);
    return 0;
  }
  int df(const InputType& p, JacobianType& j) const {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = std::exp(-p[1] * t[i]);
      j(i, 0) = w[i] * e;
      j(i, 1) = -w[i] * p[0] * t[i] * e;
    }
    return 0;
  }
};

}  // namespace

void CoincidenceTable::validate() const {
  for (const auto& row : n)
    for (double v : row)
      if (!(v >= 0.0)) throw ValidationError("coincidence counts must be >= 0");
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      if (n[k][l] > std::min(write_singles[k], read_singles[l]) * (1.0 + 1e-12))
        throw ValidationError("coincidences exceed the corresponding singles");
}

AnalysisResult g2_cross(double write_singles, double read_singles, double coincidences, double trials) {
  if (!(trials > 0.0)) throw ValidationError("g2_cross: trials must be > 0");
  if (!(write_singles > 0.0) || !(read_singles > 0.0)) return flagged("g2-poisson", "zero singles: g2 undefined");
  AnalysisResult r;
  r.method = "g2-poisson";
  r.value = coincidences * trials / (write_singles * read_singles);
  // Zero coincidences: one-count scale as the error.
  const double nc = std::max(coincidences, 1.0);
  const double rel = std::sqrt(1.0 / nc + 1.0 / write_singles + 1.0 / read_singles);
  r.sigma = coincidences > 0.0 ? r.value * rel : trials / (write_singles * read_singles);
  r.digest = digest_of(write_singles, read_singles, coincidences, trials);
  return r;
}

AnalysisResult g2_cross(const WindowCounts& c) { return g2_cross(c.write, c.read, c.coincidences, c.trials); }

AnalysisResult correlation_E(const CoincidenceTable& table) {
  table.validate();
  const double total = table.total();
  if (!(total > 0.0)) throw ValidationError("correlation_E: no coincidences");
  AnalysisResult r;
  r.method = "E-multinomial";
  r.value = (table.n[0][0] + table.n[1][1] - table.n[0][1] - table.n[1][0]) / total;
  r.sigma = std::sqrt(std::max(0.0, 1.0 - r.value * r.value) / total);
  r.digest = digest_of(table.n[0][0], table.n[0][1], table.n[1][0], table.n[1][1]);
  return r;
}

AnalysisResult chsh_S(const std::array<AnalysisResult, 4>& e) {
  AnalysisResult r;
  r.method = "chsh";
  r.value = std::abs(e[0].value - e[1].value + e[2].value + e[3].value);
  double var = 0.0;
  for (const auto& x : e) var += x.sigma * x.sigma;
  r.sigma = std::sqrt(var);
  r.digest = digest_of(e[0].value, e[1].value, e[2].value, e[3].value);
  return r;
}

AnalysisResult visibility_max(const std::vector<AnalysisResult>& e) {
  if (e.empty()) throw ValidationError("visibility: no points");
  const auto it = std::max_element(e.begin(), e.end(),
                                   [](const AnalysisResult& a, const AnalysisResult& b) { return std::abs(a.value) < std::abs(b.value); });
  AnalysisResult r;
  r.method = "visibility-max-abs-E";
  r.value = std::abs(it->value);
  r.sigma = it->sigma;
  std::vector<double> values;
  for (const auto& x : e) values.push_back(x.value);
  r.digest = digest_of_vectors(values, {}, {});
  return r;
}

AnalysisResult witness_R(const AnalysisResult& v, const AnalysisResult& g2_ee, const AnalysisResult& g2_ll) {
  if (!(v.value >= 0.0 && v.value <= 1.0)) throw ValidationError("witness_R: visibility must be in [0, 1]");
  if (!(g2_ee.value > 0.0) || !(g2_ll.value > 0.0)) throw ValidationError("witness_R: g2 values must be > 0");
  const double g = 0.5 * (g2_ee.value + g2_ll.value);
  const double sg = 0.5 * std::hypot(g2_ee.sigma, g2_ll.sigma);
  AnalysisResult r;
  r.method = "R=(1-V)(1+g)/2";
  r.value = 0.5 * (1.0 - v.value) * (1.0 + g);
  r.sigma = std::hypot(0.5 * (1.0 + g) * v.sigma, 0.5 * (1.0 - v.value) * sg);
  r.digest = digest_of(v.value, g2_ee.value, g2_ll.value);
  return r;
}

bool entangled(const AnalysisResult& r, double k) { return !r.flagged && r.value + k * r.sigma < 1.0; }

AnalysisResult nth_from_asymmetry(const AnalysisResult& stokes, const AnalysisResult& anti) {
  if (!(anti.value >= 0.0) || !(stokes.value > anti.value))
    return flagged("nth-sideband-asymmetry", "anti-Stokes rate not below Stokes rate: non-physical");
  const double d = stokes.value - anti.value;
  AnalysisResult r;
  r.method = "nth-sideband-asymmetry";
  r.value = anti.value / d;
  r.sigma = std::hypot(stokes.value / (d * d) * anti.sigma, anti.value / (d * d) * stokes.sigma);
  r.digest = digest_of(stokes.value, anti.value);
  return r;
}

AnalysisResult nth_from_counts(double stokes_counts, double anti_counts) {
  AnalysisResult s, a;
  s.value = stokes_counts;
  s.sigma = std::sqrt(std::max(stokes_counts, 0.0));
  a.value = anti_counts;
  a.sigma = std::sqrt(std::max(anti_counts, 0.0));
  return nth_from_asymmetry(s, a);
}

AnalysisResult fit_exponential(const std::vector<double>& t_all, const std::vector<double>& y_all,
                               const std::vector<double>& sigma_all, double window_start) {
  if (t_all.size() != y_all.size() || (!sigma_all.empty() && sigma_all.size() != t_all.size()))
    throw ValidationError("fit_exponential: column lengths differ");
  std::vector<double> t, y, w;
  for (std::size_t i = 0; i < t_all.size(); ++i) {
    if (t_all[i] < window_start) continue;
    t.push_back(t_all[i]);
    y.push_back(y_all[i]);
    w.push_back(sigma_all.empty() ? 1.0 : 1.0 / sigma_all[i]);
  }
  const std::string method = "exp-fit-lm";
  const std::string digest = digest_of_vectors(t, y, w);

  if (t.size() == 2) {
    if (!(y[0] > 0.0 && y[1] > 0.0) || t[0] == t[1]) throw ValidationError("fit_exponential: degenerate two-point series");
    AnalysisResult r;
    r.method = "exp-two-point";
    r.digest = digest;
    const double ratio = std::log(y[0] / y[1]);
    if (ratio == 0.0) return flagged(r.method, "constant series: T1 diverges");
    r.value = (t[1] - t[0]) / ratio;
    r.sigma = 0.0;
    return r;
  }
  if (t.size() < 4) throw ValidationError("fit_exponential: needs >= 4 points beyond the window start");

  // Start from a log-linear fit of the positive points.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (y[i] <= 0.0) continue;
    const double ly = std::log(y[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    ++m;
  }
  Eigen::VectorXd p(2);
  const double den = m * sxx - sx * sx;
  const double slope = (m >= 2 && den > 0.0) ? (m * sxy - sx * sy) / den : 0.0;
  p[1] = std::max(-slope, 0.0);
  p[0] = m > 0 ? std::exp((sy - slope * sx) / m) : 1.0;

  DecayFunctor functor(t, y, w);
  Eigen::LevenbergMarquardt<DecayFunctor> lm(functor);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(2000);
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !p.allFinite())
    return flagged(method, "fit did not converge");

  Eigen::VectorXd res(t.size());
  functor(p, res);
  Eigen::MatrixXd jac(t.size(), 2);
  functor.df(p, jac);
  Eigen::Matrix2d cov = (jac.transpose() * jac).inverse();
  if (sigma_all.empty()) cov *= res.squaredNorm() / static_cast<double>(t.size() - 2);
  const double k = p[1], sk = std::sqrt(std::max(cov(1, 1), 0.0));

  AnalysisResult r;
  r.method = method;
  r.digest = digest;
  if (!(k > 0.0) || k < sk * 1e-3) {
    r.value = std::numeric_limits<double>::infinity();
    r.sigma = std::numeric_limits<double>::infinity();
    r.flagged = true;
    r.note = "no decay resolved: T1 diverges";
    return r;
  }
  r.value = 1.0 / k;
  r.sigma = sk / (k * k);
  return r;
}

double SinusoidFit::amplitude() const { return std::hypot(a, b); }

double SinusoidFit::operator()(double phi) const { return offset + a * std::cos(phi) + b * std::sin(phi); }

double SinusoidFit::falling_zero() const { return wrap_phase(std::atan2(b, a) + 0.5 * kPi); }

double SinusoidFit::falling_zero_sigma() const {
  const double a2 = a * a + b * b;
  if (a2 == 0.0) return std::numeric_limits<double>::infinity();
  const double var = (b * b * covariance[1][1] + a * a * covariance[2][2] - 2.0 * a * b * covariance[1][2]) / (a2 * a2);
  return std::sqrt(std::max(var, 0.0));
}

SinusoidFit fit_sinusoid(const std::vector<double>& phi, const std::vector<double>& e, const std::vector<double>& sigma) {
  if (phi.size() != e.size() || (!sigma.empty() && sigma.size() != phi.size()))
    throw ValidationError("fit_sinusoid: column lengths differ");
  if (phi.size() < 6) throw ValidationError("fit_sinusoid: needs >= 6 phase points");
  const auto n = static_cast<Eigen::Index>(phi.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = sigma.empty() ? 1.0 : 1.0 / sigma[i];
    if (!std::isfinite(wi)) throw ValidationError("fit_sinusoid: zero uncertainty");
    w[i] = wi;
    x(i, 0) = wi;
    x(i, 1) = wi * std::cos(phi[i]);
    x(i, 2) = wi * std::sin(phi[i]);
    y[i] = wi * e[i];
  }
  const Eigen::Matrix3d normal = x.transpose() * x;
  const Eigen::Vector3d c = normal.ldlt().solve(x.transpose() * y);
  const Eigen::VectorXd res = x * c - y;
  Eigen::Matrix3d cov = normal.inverse();
  if (sigma.empty() && n > 3) cov *= res.squaredNorm() / static_cast<double>(n - 3);

  SinusoidFit f;
  f.offset = c[0];
  f.a = c[1];
  f.b = c[2];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) f.covariance[i][j] = cov(i, j);
  double rss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) rss += std::pow(res[i] / w[i], 2);
  f.residual_rms = std::sqrt(rss / static_cast<double>(n));
  return f;
}

ChshCalibration fit_sinusoid_and_choose_phases(const std::vector<double>& phi_w, const std::vector<AnalysisResult>& e0,
                                               const std::vector<AnalysisResult>& e1, double phi_r0, double phi_r1) {
  if (e0.size() != phi_w.size() || e1.size() != phi_w.size())
    throw ValidationError("calibration: both curves need one E per phase point");
  const auto split = [](const std::vector<AnalysisResult>& e, std::vector<double>& v, std::vector<double>& s) {
    bool all = true;
    for (const auto& x : e) {
      v.push_back(x.value);
      s.push_back(x.sigma);
      all = all && x.sigma > 0.0;
    }
    if (!all) s.clear();
  };
  std::vector<double> v0, s0, v1, s1;
  split(e0, v0, s0);
  split(e1, v1, s1);

  ChshCalibration c;
  c.curve0 = fit_sinusoid(phi_w, v0, s0);
  c.curve1 = fit_sinusoid(phi_w, v1, s1);
  for (const auto* f : {&c.curve0, &c.curve1})
    if (f->amplitude() < 3.0 * f->residual_rms) throw NumericalError("calibration: fit degenerate (amplitude below 3 sigma of residuals)");
  c.phi_0 = c.curve0.falling_zero();
  c.phi_0_sigma = c.curve0.falling_zero_sigma();
  c.amplitude = c.curve0.amplitude();

  // S(w0, w1) = f(w0) + g(w1) with f = E0 + E1 and g = E1 - E0, both sinusoids in phi_w.
  const double fc = c.curve0.offset + c.curve1.offset, fa = c.curve0.a + c.curve1.a, fb = c.curve0.b + c.curve1.b;
  const double gc = c.curve1.offset - c.curve0.offset, ga = c.curve1.a - c.curve0.a, gb = c.curve1.b - c.curve0.b;
  const double f_arg = std::atan2(fb, fa), g_arg = std::atan2(gb, ga);
  const double f_amp = std::hypot(fa, fb), g_amp = std::hypot(ga, gb);
  const double s_max = fc + f_amp + gc + g_amp;
  const double s_min = fc - f_amp + gc - g_amp;

  // Ties go to the branch on the falling zero, which is the minimum of S in this convention.
  const bool use_max = std::abs(s_max) > std::abs(s_min) * (1.0 + 1e-12);
  const double w0 = use_max ? f_arg : f_arg + kPi;
  const double w1 = use_max ? g_arg : g_arg + kPi;
  c.settings.phi_w = {wrap_phase(w0), wrap_phase(w1)};
  c.settings.phi_r = {phi_r0, phi_r1};
  c.expected_S = std::abs(use_max ? s_max : s_min);
  for (int i = 0; i < 2; ++i) {
    const double d = std::remainder(c.settings.phi_w[i] - c.phi_0 - 0.25 * kPi, 0.5 * kPi);
    c.epsilon[i] = d;
  }
  return c;
}

AnalysisResult bootstrap_E(const CoincidenceTable& table, int resamples, std::uint64_t seed) {
  table.validate();
  const double total = table.total();
  if (!(total > 0.0)) throw ValidationError("bootstrap_E: no coincidences");
  if (resamples < 2) throw ValidationError("bootstrap_E: needs >= 2 resamples");
  const auto events = static_cast<std::int64_t>(std::llround(total));
  const std::array<double, 4> p = {table.n[0][0] / total, table.n[1][1] / total, table.n[0][1] / total,
                                   table.n[1][0] / total};
  double sum = 0.0, sum2 = 0.0;
  for (int b = 0; b < resamples; ++b) {
    SplitMix64 rng = SplitMix64::for_trial(seed, static_cast<std::uint64_t>(b), 0xb007);
    // Multinomial draw as a chain of conditional binomials.
    std::array<std::int64_t, 4> k{};
    std::int64_t left = events;
    double mass = 1.0;
    for (int i = 0; i < 3; ++i) {
      const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
      k[i] = left > 0 ? std::binomial_distribution<std::int64_t>(left, q)(rng) : 0;
      left -= k[i];
      mass -= p[i];
    }
    k[3] = left;
    const double e = static_cast<double>(k[0] + k[1] - k[2] - k[3]) / static_cast<double>(events);
    sum += e;
    sum2 += e * e;
  }
  AnalysisResult r = correlation_E(table);
  const double mean = sum / resamples;
  r.sigma = std::sqrt(std::max(0.0, (sum2 - resamples * mean * mean) / (resamples - 1)));
  r.method = "E-bootstrap";
  return r;
}

WindowCounts window_counts(const protocol::ExperimentResult& result, std::size_t setting, protocol::Window write,
                           protocol::Window read, bool exact, double trials) {
  const auto& s = result.settings.at(setting);
  const std::uint32_t mw = result.window_mask(write), mr = result.window_mask(read);
  if (mw == 0 || mr == 0) throw ValidationError("window not detected in this experiment");
  WindowCounts c;
  if (exact) {
    if (!(trials > 0.0)) throw ValidationError("exact window counts need trials > 0");
    const double nw = s.exact.none_click(mw), nr = s.exact.none_click(mr), nwr = s.exact.none_click(mw | mr);
    c.trials = trials;
    c.write = trials * (1.0 - nw);
    c.read = trials * (1.0 - nr);
    c.coincidences = trials * (1.0 - nw - nr + nwr);
    return c;
  }
  const auto& counts = s.sampled.counts;
  if (counts.empty()) throw ValidationError("result has no sampled counts");
  c.trials = static_cast<double>(s.sampled.trials);
  for (std::uint32_t p = 0; p < counts.size(); ++p) {
    if (counts[p] == 0) continue;
    const bool w = p & mw, r = p & mr;
    if (w) c.write += static_cast<double>(counts[p]);
    if (r) c.read += static_cast<double>(counts[p]);
    if (w && r) c.coincidences += static_cast<double>(counts[p]);
  }
  return c;
}

CoincidenceTable coincidence_table(const protocol::ExperimentResult& result, std::size_t setting,
                                   protocol::Window write, protocol::Window read, bool exact, double trials) {
  const auto& s = result.settings.at(setting);
  std::array<std::uint32_t, 2> wb{}, rb{};
  for (std::size_t d = 0; d < 2; ++d) {
    wb[d] = result.detector_bit(write, d);
    rb[d] = result.detector_bit(read, d);
  }
  CoincidenceTable t;
  if (exact) {
    if (!(trials > 0.0)) throw ValidationError("exact coincidence table needs trials > 0");
    t.trials = trials;
    for (int k = 0; k < 2; ++k) {
      t.write_singles[k] = trials * s.exact.all_click(wb[k]);
      t.read_singles[k] = trials * s.exact.all_click(rb[k]);
      for (int l = 0; l < 2; ++l) t.n[k][l] = trials * s.exact.all_click(wb[k] | rb[l]);
    }
    return t;
  }
  if (s.sampled.counts.empty()) throw ValidationError("result has no sampled counts");
  t.trials = static_cast<double>(s.sampled.trials);
  for (int k = 0; k < 2; ++k) {
    t.write_singles[k] = static_cast<double>(s.sampled.all_click(wb[k]));
    t.read_singles[k] = static_cast<double>(s.sampled.all_click(rb[k]));
    for (int l = 0; l < 2; ++l) t.n[k][l] = static_cast<double>(s.sampled.all_click(wb[k] | rb[l]));
  }
  return t;
}

}  // namespace phonon::analysis
