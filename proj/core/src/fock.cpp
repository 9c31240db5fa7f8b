#include "phonon/fock.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "phonon/errors.hpp"

namespace phonon::fock {

namespace {

using cd = std::complex<double>;
using Sparse = Eigen::SparseMatrix<cd>;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

double sqrt_factorial_ratio(int hi, int lo) {
  // sqrt(hi! / lo!) for hi >= lo
  double r = 1.0;
  for (int k = lo + 1; k <= hi; ++k) r *= k;
  return std::sqrt(r);
}

struct LocalAmp {
  int na, nb;
  cd amp;
};

void enumerate(std::size_t modes, int remaining, std::vector<std::uint8_t>& cur, std::vector<std::uint8_t>& out) {
  if (cur.size() == modes) {
    out.insert(out.end(), cur.begin(), cur.end());
    return;
  }
  for (int n = 0; n <= remaining; ++n) {
    cur.push_back(static_cast<std::uint8_t>(n));
    enumerate(modes, remaining - n, cur, out);
    cur.pop_back();
  }
}

class FockEngine final : public Engine {
public:
  explicit FockEngine(int cutoff) : cutoff_(cutoff) {}
  std::string name() const override { return "fock(N=" + std::to_string(cutoff_) + ")"; }
  OutcomeDistribution evaluate(const Circuit& circuit, const std::vector<Detector>& detectors) const override {
    FockState state(cutoff_);
    for (const auto& op : circuit.operations()) state.apply(op);
    return state.click_distribution(detectors);
  }

private:
  int cutoff_;
};

}  // namespace

FockBasis::FockBasis(std::size_t modes, int cutoff) : modes_(modes), cutoff_(cutoff) {
  if (cutoff < 1 || cutoff > 60) throw ValidationError("Fock truncation must be in [1, 60]");
  std::vector<std::uint8_t> cur;
  if (modes == 0) {
    states_.clear();
    totals_ = {0};
    index_[0] = 0;
    return;
  }
  enumerate(modes, cutoff, cur, states_);
  const std::size_t n = states_.size() / modes;
  totals_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int t = 0;
    for (std::size_t m = 0; m < modes; ++m) t += states_[i * modes + m];
    totals_[i] = t;
    index_[key(state(i))] = i;
  }
}

std::uint64_t FockBasis::key(const std::uint8_t* occ) const {
  std::uint64_t k = 0;
  for (std::size_t m = 0; m < modes_; ++m) k = k * static_cast<std::uint64_t>(cutoff_ + 1) + occ[m];
  return k;
}

std::int64_t FockBasis::find(const std::uint8_t* occ) const {
  int t = 0;
  for (std::size_t m = 0; m < modes_; ++m) t += occ[m];
  if (t > cutoff_) return -1;
  const auto it = index_.find(key(occ));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

FockState::FockState(int cutoff) : FockState(std::vector<std::string>{}, cutoff) {}

FockState::FockState(std::vector<std::string> modes, int cutoff)
    : cutoff_(cutoff), modes_(std::move(modes)), basis_(std::make_shared<FockBasis>(modes_.size(), cutoff)) {
  rho_ = Matrix::Zero(static_cast<Eigen::Index>(basis_->size()), static_cast<Eigen::Index>(basis_->size()));
  rho_(0, 0) = 1.0;
}

FockState FockState::vacuum(const std::vector<std::string>& modes, int cutoff) {
  FockState s(cutoff);
  for (const auto& m : modes) s.add_mode(m);
  return s;
}

FockState FockState::thermal(const std::vector<std::string>& modes, const std::vector<double>& nbar, int cutoff) {
  if (modes.size() != nbar.size()) throw ValidationError("thermal state: one occupation per mode");
  for (double n : nbar)
    if (!(n >= 0.0)) throw ValidationError("thermal state: occupation must be >= 0");
  FockState s(modes, cutoff);
  s.rho_.setZero();
  double total = 0.0;
  for (std::size_t i = 0; i < s.basis_->size(); ++i) {
    double p = 1.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double n = nbar[m];
      p *= std::pow(n / (n + 1.0), s.basis_->occupation(i, m)) / (n + 1.0);
    }
    s.rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = p;
    total += p;
  }
  s.rho_ /= total;
  return s;
}

std::size_t FockState::mode_index(const std::string& mode) const {
  const auto it = std::find(modes_.begin(), modes_.end(), mode);
  if (it == modes_.end()) throw ValidationError("unregistered mode '" + mode + "'");
  return static_cast<std::size_t>(it - modes_.begin());
}

bool FockState::has_mode(const std::string& mode) const {
  return std::find(modes_.begin(), modes_.end(), mode) != modes_.end();
}

void FockState::add_mode(const std::string& mode) {
  if (has_mode(mode)) throw ValidationError("mode '" + mode + "' already registered");
  const std::size_t m_old = modes_.size();
  auto grown = std::make_shared<FockBasis>(m_old + 1, cutoff_);
  std::vector<Eigen::Index> map(basis_->size());
  std::vector<std::uint8_t> occ(m_old + 1, 0);
  for (std::size_t i = 0; i < basis_->size(); ++i) {
    std::copy(basis_->state(i), basis_->state(i) + m_old, occ.begin());
    occ[m_old] = 0;
    map[i] = static_cast<Eigen::Index>(grown->find(occ.data()));
  }
  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(grown->size()), static_cast<Eigen::Index>(grown->size()));
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j)
      r(map[i], map[j]) = rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  rho_ = std::move(r);
  basis_ = std::move(grown);
  modes_.push_back(mode);
}

void FockState::trace_out(const std::string& mode) {
  const std::size_t m = mode_index(mode);
  const std::size_t mo = modes_.size();
  auto shrunk = std::make_shared<FockBasis>(mo - 1, cutoff_);
  // Group old states by the traced occupation.
  std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> groups(static_cast<std::size_t>(cutoff_ + 1));
  std::vector<std::uint8_t> occ(mo);
  for (std::size_t i = 0; i < basis_->size(); ++i) {
    const std::uint8_t* s = basis_->state(i);
    std::size_t w = 0;
    for (std::size_t k = 0; k < mo; ++k)
      if (k != m) occ[w++] = s[k];
    groups[s[m]].emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(shrunk->find(occ.data())));
  }
  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(shrunk->size()), static_cast<Eigen::Index>(shrunk->size()));
  for (const auto& g : groups)
    for (const auto& [i, ri] : g)
      for (const auto& [j, rj] : g) r(ri, rj) += rho_(i, j);
  rho_ = std::move(r);
  basis_ = std::move(shrunk);
  modes_.erase(modes_.begin() + static_cast<std::ptrdiff_t>(m));
}

template <class LocalMap>
void FockState::apply_two_mode(std::size_t ma, std::size_t mb, const LocalMap& local) {
  const std::size_t d = basis_->size();
  std::map<std::pair<int, int>, std::vector<LocalAmp>> cache;
  std::vector<Eigen::Triplet<cd>> triplets;
  std::vector<std::uint8_t> occ(modes_.size());
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint8_t* s = basis_->state(i);
    const std::pair<int, int> key{s[ma], s[mb]};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, local(key.first, key.second)).first;
    std::copy(s, s + modes_.size(), occ.begin());
    for (const auto& out : it->second) {
      if (out.na > 255 || out.nb > 255) continue;
      occ[ma] = static_cast<std::uint8_t>(out.na);
      occ[mb] = static_cast<std::uint8_t>(out.nb);
      const std::int64_t j = basis_->find(occ.data());
      if (j >= 0) triplets.emplace_back(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i), out.amp);
    }
  }
  Sparse u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  u.setFromTriplets(triplets.begin(), triplets.end());
  const Matrix left = u * rho_;
  const Matrix right = u * left.adjoint();
  rho_ = right.adjoint();
}

template <class Element>
void FockState::apply_kraus(std::size_t mode, int count, int direction, const Element& element) {
  const std::size_t d = basis_->size();
  Matrix out = Matrix::Zero(rho_.rows(), rho_.cols());
  std::vector<std::uint8_t> occ(modes_.size());
  for (int k = 0; k <= count; ++k) {
    std::vector<Eigen::Triplet<cd>> triplets;
    for (std::size_t i = 0; i < d; ++i) {
      const std::uint8_t* s = basis_->state(i);
      const int n = s[mode];
      const int target = n + direction * k;
      if (target < 0) continue;
      const double c = element(k, n);
      if (c == 0.0) continue;
      std::copy(s, s + modes_.size(), occ.begin());
      occ[mode] = static_cast<std::uint8_t>(target);
      const std::int64_t j = basis_->find(occ.data());
      if (j >= 0) triplets.emplace_back(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i), c);
    }
    if (triplets.empty()) continue;
    Sparse kraus(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    kraus.setFromTriplets(triplets.begin(), triplets.end());
    const Matrix left = kraus * rho_;
    const Matrix right = kraus * left.adjoint();
    out += right.adjoint();
  }
  rho_ = std::move(out);
}

void FockState::squeeze(const std::string& a, const std::string& b, double p, double phase) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("squeeze: p must be in [0, 1)");
  const std::size_t ma = mode_index(a), mb = mode_index(b);
  if (ma == mb) throw ValidationError("squeeze: modes must differ");
  if (p == 0.0) return;
  // exp(t a^dag b^dag) cosh(r)^{-(n_a + n_b + 1)} exp(-t^* a b), t = e^{i phase} tanh r.
  const double th = std::sqrt(p);
  const double sech = std::sqrt(1.0 - p);
  const cd t = std::polar(th, phase);
  const int cutoff = cutoff_;
  apply_two_mode(ma, mb, [&](int na, int nb) {
    std::map<std::pair<int, int>, cd> acc;
    for (int k = 0; k <= std::min(na, nb); ++k) {
      const int ra = na - k, rb = nb - k;
      cd amp = std::pow(-std::conj(t), k) / std::tgamma(k + 1.0) * sqrt_factorial_ratio(na, ra) *
               sqrt_factorial_ratio(nb, rb) * std::pow(sech, ra + rb + 1);
      for (int l = 0; ra + rb + 2 * l <= cutoff; ++l) {
        const cd up = std::pow(t, l) / std::tgamma(l + 1.0) * sqrt_factorial_ratio(ra + l, ra) *
                      sqrt_factorial_ratio(rb + l, rb);
        acc[{ra + l, rb + l}] += amp * up;
      }
    }
    std::vector<LocalAmp> out;
    for (const auto& [k, v] : acc) out.push_back({k.first, k.second, v});
    return out;
  });
}

void FockState::beam_splitter(const std::string& a, const std::string& b, double transmissivity, double phase) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
    throw ValidationError("beam splitter: transmissivity must be in [0, 1]");
  const std::size_t ma = mode_index(a), mb = mode_index(b);
  if (ma == mb) throw ValidationError("beam splitter: modes must differ");
  const double c = std::sqrt(transmissivity);
  const double s = std::sqrt(1.0 - transmissivity);
  // B a^dag B^dag = c a^dag - e^{-i phase} s b^dag, B b^dag B^dag = e^{i phase} s a^dag + c b^dag.
  const cd u00 = c, u10 = -std::polar(s, -phase), u01 = std::polar(s, phase), u11 = c;
  apply_two_mode(ma, mb, [&](int na, int nb) {
    const int n = na + nb;
    std::vector<cd> acc(static_cast<std::size_t>(n + 1), 0.0);
    const double norm = 1.0 / std::sqrt(std::tgamma(na + 1.0) * std::tgamma(nb + 1.0));
    for (int j = 0; j <= na; ++j)
      for (int k = 0; k <= nb; ++k) {
        const int out_a = j + k;
        const cd term = binomial(na, j) * binomial(nb, k) * std::pow(u00, j) * std::pow(u10, na - j) *
                        std::pow(u01, k) * std::pow(u11, nb - k);
        acc[static_cast<std::size_t>(out_a)] += term;
      }
    std::vector<LocalAmp> out;
    for (int ma_out = 0; ma_out <= n; ++ma_out) {
      const cd v = acc[static_cast<std::size_t>(ma_out)] * norm *
                   std::sqrt(std::tgamma(ma_out + 1.0) * std::tgamma(n - ma_out + 1.0));
      if (v != cd(0.0)) out.push_back({ma_out, n - ma_out, v});
    }
    return out;
  });
}

void FockState::phase(const std::string& mode, double phi) {
  const std::size_t m = mode_index(mode);
  const std::size_t d = basis_->size();
  std::vector<cd> f(d);
  for (std::size_t i = 0; i < d; ++i) f[i] = std::polar(1.0, phi * basis_->occupation(i, m));
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i)
      rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= f[i] * std::conj(f[j]);
}

void FockState::loss(const std::string& mode, double survival) {
  if (!(survival >= 0.0 && survival <= 1.0)) throw ValidationError("loss: survival must be in [0, 1]");
  const std::size_t m = mode_index(mode);
  if (survival == 1.0) return;
  apply_kraus(m, cutoff_, -1, [survival](int k, int n) {
    if (k > n) return 0.0;
    return std::sqrt(binomial(n, k) * std::pow(survival, n - k) * std::pow(1.0 - survival, k));
  });
}

void FockState::amplify(const std::string& mode, double gain) {
  if (!(gain >= 1.0) || !std::isfinite(gain)) throw ValidationError("amplifier: gain must be >= 1");
  const std::size_t m = mode_index(mode);
  if (gain == 1.0) return;
  apply_kraus(m, cutoff_, +1, [gain](int k, int n) {
    return std::sqrt(binomial(n + k, k) * std::pow(gain, -(n + 1)) * std::pow(1.0 - 1.0 / gain, k));
  });
}

void FockState::thermal_loss(const std::string& mode, double survival, double n_env) {
  if (!(survival >= 0.0 && survival <= 1.0)) throw ValidationError("thermal loss: survival must be in [0, 1]");
  if (!(n_env >= 0.0) || !std::isfinite(n_env)) throw ValidationError("thermal loss: n_env must be >= 0");
  const double gain = 1.0 + (1.0 - survival) * n_env;
  loss(mode, survival / gain);
  amplify(mode, gain);
}

void FockState::thermal_noise(const std::string& mode, double added, double epsilon) {
  if (!(added >= 0.0)) throw ValidationError("thermal noise: added occupancy must be >= 0");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("thermal noise: epsilon must be in (0, 1]");
  if (added == 0.0) return;
  thermal_loss(mode, 1.0 - epsilon, added / epsilon);
}

void FockState::apply(const Operation& op) {
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

double FockState::trace() const { return rho_.trace().real(); }

double FockState::mean_photon_number(const std::string& mode) const {
  const std::size_t m = mode_index(mode);
  double s = 0.0;
  for (std::size_t i = 0; i < basis_->size(); ++i)
    s += basis_->occupation(i, m) * rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  return s;
}

double FockState::joint_probability(const std::vector<std::pair<std::string, int>>& occupations) const {
  std::vector<std::pair<std::size_t, int>> want;
  for (const auto& [label, n] : occupations) want.emplace_back(mode_index(label), n);
  double s = 0.0;
  for (std::size_t i = 0; i < basis_->size(); ++i) {
    bool match = true;
    for (const auto& [m, n] : want) match = match && basis_->occupation(i, m) == n;
    if (match) s += rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return s;
}

double FockState::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double FockState::min_eigenvalue() const {
  const Matrix h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void FockState::project_click(const std::string& mode) {
  const std::size_t m = mode_index(mode);
  for (std::size_t i = 0; i < basis_->size(); ++i)
    if (basis_->occupation(i, m) == 0) {
      rho_.row(static_cast<Eigen::Index>(i)).setZero();
      rho_.col(static_cast<Eigen::Index>(i)).setZero();
    }
}

void FockState::normalize() {
  const double t = trace();
  if (!(t > 0.0)) throw NumericalError("cannot normalize a state with zero trace");
  rho_ /= t;
}

FockState FockState::reduced(const std::vector<std::string>& keep) const {
  FockState s = *this;
  for (const auto& m : modes_)
    if (std::find(keep.begin(), keep.end(), m) == keep.end()) s.trace_out(m);
  if (s.modes_ == keep) return s;
  // Reorder to the requested mode order.
  FockState out(keep, cutoff_);
  std::vector<std::size_t> perm;
  for (const auto& m : keep) perm.push_back(s.mode_index(m));
  std::vector<Eigen::Index> map(s.basis_->size());
  std::vector<std::uint8_t> occ(keep.size());
  for (std::size_t i = 0; i < s.basis_->size(); ++i) {
    for (std::size_t k = 0; k < keep.size(); ++k) occ[k] = s.basis_->state(i)[perm[k]];
    map[i] = static_cast<Eigen::Index>(out.basis_->find(occ.data()));
  }
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j)
      out.rho_(map[i], map[j]) = s.rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

OutcomeDistribution FockState::click_distribution(const std::vector<Detector>& detectors) const {
  if (detectors.size() > 20) throw ValidationError("too many detectors for exact pattern enumeration");
  const std::size_t nd = detectors.size();
  std::vector<std::vector<std::size_t>> owned(nd);
  std::vector<std::string> labels;
  std::vector<double> extra;
  for (std::size_t d = 0; d < nd; ++d) {
    for (const auto& m : detectors[d].modes) owned[d].push_back(mode_index(m));
    labels.push_back(detectors[d].label);
    extra.push_back(detectors[d].extra_click);
  }
  std::vector<double> probs(std::size_t{1} << nd, 0.0);
  std::vector<std::size_t> active;
  std::vector<double> silent;
  for (std::size_t i = 0; i < basis_->size(); ++i) {
    const double w = rho_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    if (w == 0.0) continue;
    active.clear();
    silent.clear();
    for (std::size_t d = 0; d < nd; ++d) {
      int n = 0;
      for (std::size_t m : owned[d]) n += basis_->occupation(i, m);
      if (n == 0) continue;
      active.push_back(d);
      silent.push_back(std::pow(1.0 - detectors[d].efficiency, n));
    }
    const std::size_t combos = std::size_t{1} << active.size();
    for (std::size_t c = 0; c < combos; ++c) {
      double p = w;
      std::uint32_t pattern = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (c & (std::size_t{1} << k)) {
          p *= 1.0 - silent[k];
          pattern |= 1u << active[k];
        } else {
          p *= silent[k];
        }
      }
      probs[pattern] += p;
    }
  }
  // Truncation deficit goes to the all-click pattern; below rounding resolution it is noise and is dropped.
  const double deficit = 1.0 - trace();
  if (std::abs(deficit) > 64.0 * std::numeric_limits<double>::epsilon()) probs.back() += deficit;
  return OutcomeDistribution(std::move(labels), std::move(probs)).with_extra_clicks(extra);
}

void FockState::dump(std::ostream& out) const {
  out << "# fock N=" << cutoff_ << " modes=";
  for (std::size_t m = 0; m < modes_.size(); ++m) out << (m ? "," : "") << modes_[m];
  out << " dim=" << basis_->size() << "\n";
  for (std::size_t i = 0; i < basis_->size(); ++i) {
    out << "# state " << i << ":";
    for (std::size_t m = 0; m < modes_.size(); ++m) out << ' ' << basis_->occupation(i, m);
    out << "\n";
  }
  out.precision(17);
  for (Eigen::Index i = 0; i < rho_.rows(); ++i)
    for (Eigen::Index j = 0; j < rho_.cols(); ++j)
      if (rho_(i, j) != cd(0.0)) out << i << ' ' << j << ' ' << rho_(i, j).real() << ' ' << rho_(i, j).imag() << "\n";
}

}  // namespace phonon::fock

namespace phonon {

std::unique_ptr<Engine> make_fock_engine(int truncation) { return std::make_unique<fock::FockEngine>(truncation); }

}  // namespace phonon
