#include "phonon/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "phonon/errors.hpp"

namespace phonon::gaussian {

namespace {

using cd = std::complex<double>;

std::vector<Eigen::Index> quadrature_indices(const std::vector<std::size_t>& modes) {
  std::vector<Eigen::Index> idx;
  idx.reserve(2 * modes.size());
  for (std::size_t m : modes) {
    idx.push_back(static_cast<Eigen::Index>(2 * m));
    idx.push_back(static_cast<Eigen::Index>(2 * m + 1));
  }
  return idx;
}

class GaussianEngine final : public Engine {
public:
  std::string name() const override { return "gaussian"; }
  OutcomeDistribution evaluate(const Circuit& circuit, const std::vector<Detector>& detectors) const override {
    CovarianceState state;
    for (const auto& op : circuit.operations()) state.apply(op);
    return state.click_probabilities(detectors);
  }
};

}  // namespace

Eigen::MatrixXd symplectic_from_bogoliubov(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v) {
  const Eigen::Index k = u.rows();
  const Eigen::MatrixXcd a = u + v;
  const Eigen::MatrixXcd b = u - v;
  Eigen::MatrixXd s(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      s(2 * i, 2 * j) = a(i, j).real();
      s(2 * i, 2 * j + 1) = -b(i, j).imag();
      s(2 * i + 1, 2 * j) = a(i, j).imag();
      s(2 * i + 1, 2 * j + 1) = b(i, j).real();
    }
  return s;
}

Eigen::MatrixXd two_mode_squeeze_symplectic(double p, double phase) {
  const double r = std::atanh(std::sqrt(p));
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(2, 2) * std::cosh(r);
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(2, 2);
  v(0, 1) = v(1, 0) = std::polar(std::sinh(r), phase);
  return symplectic_from_bogoliubov(u, v);
}

Eigen::MatrixXd beam_splitter_symplectic(double transmissivity, double phase) {
  const double c = std::sqrt(transmissivity);
  const double s = std::sqrt(1.0 - transmissivity);
  Eigen::MatrixXcd u(2, 2);
  u << c, std::polar(s, phase), -std::polar(s, -phase), c;
  return symplectic_from_bogoliubov(u, Eigen::MatrixXcd::Zero(2, 2));
}

Eigen::MatrixXd phase_symplectic(double phi) {
  Eigen::MatrixXcd u(1, 1);
  u(0, 0) = std::polar(1.0, phi);
  return symplectic_from_bogoliubov(u, Eigen::MatrixXcd::Zero(1, 1));
}

CovarianceState CovarianceState::vacuum(const std::vector<std::string>& modes) {
  CovarianceState s;
  for (const auto& m : modes) s.add_mode(m);
  return s;
}

std::size_t CovarianceState::mode_index(const std::string& mode) const {
  const auto it = std::find(modes_.begin(), modes_.end(), mode);
  if (it == modes_.end()) throw ValidationError("unregistered mode '" + mode + "'");
  return static_cast<std::size_t>(it - modes_.begin());
}

bool CovarianceState::has_mode(const std::string& mode) const {
  return std::find(modes_.begin(), modes_.end(), mode) != modes_.end();
}

void CovarianceState::add_mode(const std::string& mode) {
  if (has_mode(mode)) throw ValidationError("mode '" + mode + "' already registered");
  const Eigen::Index n = sigma_.rows();
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 2, n + 2);
  grown.topLeftCorner(n, n) = sigma_;
  grown(n, n) = grown(n + 1, n + 1) = 0.5;
  sigma_ = std::move(grown);
  modes_.push_back(mode);
}

void CovarianceState::trace_out(const std::string& mode) {
  const std::size_t m = mode_index(mode);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < modes_.size(); ++i)
    if (i != m) keep.push_back(i);
  const auto idx = quadrature_indices(keep);
  Eigen::MatrixXd reduced = sigma_(idx, idx);
  sigma_ = std::move(reduced);
  modes_.erase(modes_.begin() + static_cast<std::ptrdiff_t>(m));
}

void CovarianceState::symplectic_apply(const std::vector<std::string>& modes, const Eigen::MatrixXd& s) {
  std::vector<std::size_t> m;
  for (const auto& label : modes) m.push_back(mode_index(label));
  const auto idx = quadrature_indices(m);
  Eigen::MatrixXd rows = s * sigma_(idx, Eigen::all);
  sigma_(idx, Eigen::all) = rows;
  Eigen::MatrixXd cols = sigma_(Eigen::all, idx) * s.transpose();
  sigma_(Eigen::all, idx) = cols;
}

void CovarianceState::squeeze(const std::string& a, const std::string& b, double p, double phase) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("squeeze: p must be in [0, 1)");
  if (p == 0.0) {
    mode_index(a);
    mode_index(b);
    return;
  }
  symplectic_apply({a, b}, two_mode_squeeze_symplectic(p, phase));
}

void CovarianceState::beam_splitter(const std::string& a, const std::string& b, double transmissivity,
                                    double phase) {
  symplectic_apply({a, b}, beam_splitter_symplectic(transmissivity, phase));
}

void CovarianceState::phase(const std::string& mode, double phi) { symplectic_apply({mode}, phase_symplectic(phi)); }

void CovarianceState::thermal_loss(const std::string& mode, double survival, double n_env) {
  const Eigen::Index i = static_cast<Eigen::Index>(2 * mode_index(mode));
  const double root = std::sqrt(survival);
  sigma_.middleRows(i, 2) *= root;
  sigma_.middleCols(i, 2) *= root;
  sigma_(i, i) += (1.0 - survival) * (n_env + 0.5);
  sigma_(i + 1, i + 1) += (1.0 - survival) * (n_env + 0.5);
}

void CovarianceState::apply(const Operation& op) {
  std::visit(
      [this](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Squeeze>) squeeze(o.a, o.b, o.p, o.phase);
        else if constexpr (std::is_same_v<T, BeamSplitter>) beam_splitter(o.a, o.b, o.transmissivity, o.phase);
        else if constexpr (std::is_same_v<T, PhaseShift>) phase(o.mode, o.phase);
        else if constexpr (std::is_same_v<T, ThermalLoss>) thermal_loss(o.mode, o.survival, o.n_env);
        else if constexpr (std::is_same_v<T, AddMode>) add_mode(o.mode);
        else if constexpr (std::is_same_v<T, TraceOut>) trace_out(o.mode);
      },
      op);
}

double CovarianceState::mean_photon_number(const std::string& mode) const {
  const Eigen::Index i = static_cast<Eigen::Index>(2 * mode_index(mode));
  return 0.5 * (sigma_(i, i) + sigma_(i + 1, i + 1)) - 0.5;
}

double CovarianceState::uncertainty_margin() const {
  const Eigen::Index n = sigma_.rows();
  Eigen::MatrixXcd h = sigma_.cast<cd>();
  for (Eigen::Index k = 0; k < n; k += 2) {
    h(k, k + 1) += cd(0.0, 0.5);
    h(k + 1, k) -= cd(0.0, 0.5);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double CovarianceState::vacuum_probability(const std::vector<std::size_t>& mode_indices) const {
  if (mode_indices.empty()) return 1.0;
  const auto idx = quadrature_indices(mode_indices);
  Eigen::MatrixXd m = sigma_(idx, idx);
  m.diagonal().array() += 0.5;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("click probability: sigma_S + I/2 is not positive definite");
  // det = prod(L_ii)^2, so 1/sqrt(det) = 1/prod(L_ii).
  double prod = 1.0;
  for (Eigen::Index k = 0; k < m.rows(); ++k) prod *= llt.matrixL()(k, k);
  if (!(prod > 0.0) || !std::isfinite(prod)) throw NumericalError("click probability: non-positive determinant");
  return 1.0 / prod;
}

OutcomeDistribution CovarianceState::click_probabilities(const std::vector<Detector>& detectors) const {
  if (detectors.size() > 20) throw ValidationError("too many detectors for exact pattern enumeration");
  CovarianceState lossy = *this;
  std::vector<std::vector<std::size_t>> owned(detectors.size());
  std::vector<std::string> labels;
  std::vector<double> extra;
  for (std::size_t d = 0; d < detectors.size(); ++d) {
    for (const auto& m : detectors[d].modes) {
      if (detectors[d].efficiency < 1.0) lossy.thermal_loss(m, detectors[d].efficiency, 0.0);
      owned[d].push_back(mode_index(m));
    }
    labels.push_back(detectors[d].label);
    extra.push_back(detectors[d].extra_click);
  }
  const std::size_t n = std::size_t{1} << detectors.size();
  std::vector<double> q(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    std::vector<std::size_t> modes;
    for (std::size_t d = 0; d < detectors.size(); ++d)
      if (s & (1u << d)) modes.insert(modes.end(), owned[d].begin(), owned[d].end());
    q[s] = lossy.vacuum_probability(modes);
  }
  return OutcomeDistribution(std::move(labels), patterns_from_no_click(q)).with_extra_clicks(extra);
}

}  // namespace phonon::gaussian

namespace phonon {

std::unique_ptr<Engine> make_gaussian_engine() { return std::make_unique<gaussian::GaussianEngine>(); }

}  // namespace phonon
