#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phonon/circuit.hpp"

namespace phonon::gaussian {

// Zero-mean Gaussian state. Quadratures x = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2), ordered
// (x1, p1, x2, p2, ...); vacuum covariance is I/2. No displacement exists in the vocabulary, so the
// mean is identically zero and not stored.
class CovarianceState {
public:
  CovarianceState() = default;
  static CovarianceState vacuum(const std::vector<std::string>& modes);

  const std::vector<std::string>& modes() const { return modes_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  std::size_t mode_index(const std::string& mode) const;
  bool has_mode(const std::string& mode) const;

  void add_mode(const std::string& mode);
  void trace_out(const std::string& mode);
  void squeeze(const std::string& a, const std::string& b, double p, double phase);
  void beam_splitter(const std::string& a, const std::string& b, double transmissivity, double phase);
  void phase(const std::string& mode, double phi);
  void thermal_loss(const std::string& mode, double survival, double n_env);
  void apply(const Operation& op);

  // Applies S to the listed modes (interleaved quadratures of those modes).
  void symplectic_apply(const std::vector<std::string>& modes, const Eigen::MatrixXd& s);

  double mean_photon_number(const std::string& mode) const;
  // Smallest eigenvalue of sigma + (i/2) Omega; non-negative for physical states.
  double uncertainty_margin() const;

  // P(no quantum in any of the listed modes) = 1/sqrt(det(sigma_S + I/2)).
  double vacuum_probability(const std::vector<std::size_t>& mode_indices) const;
  // Full pattern distribution for the detectors: efficiency as pure loss, inclusion-exclusion over
  // detector subsets, extra clicks folded in.
  OutcomeDistribution click_probabilities(const std::vector<Detector>& detectors) const;

private:
  std::vector<std::string> modes_;
  Eigen::MatrixXd sigma_;
};

// Symplectic matrix (interleaved quadratures) of a' = U a + V a^dag.
Eigen::MatrixXd symplectic_from_bogoliubov(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v);
Eigen::MatrixXd two_mode_squeeze_symplectic(double p, double phase);
Eigen::MatrixXd beam_splitter_symplectic(double transmissivity, double phase);
Eigen::MatrixXd phase_symplectic(double phi);

}  // namespace phonon::gaussian
