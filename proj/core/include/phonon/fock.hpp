#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "phonon/circuit.hpp"

namespace phonon::fock {

// Occupation-number basis of M modes with total excitation number at most N. The set is closed
// under beam splitters and phase shifts, so passive optics never leaves the truncated space.
class FockBasis {
public:
  FockBasis(std::size_t modes, int cutoff);

  std::size_t mode_count() const { return modes_; }
  int cutoff() const { return cutoff_; }
  std::size_t size() const { return totals_.size(); }
  // Occupations of basis state i.
  const std::uint8_t* state(std::size_t i) const { return states_.data() + i * modes_; }
  int occupation(std::size_t i, std::size_t mode) const { return state(i)[mode]; }
  int total(std::size_t i) const { return totals_[i]; }
  // Index of the given occupations, or -1 when outside the truncated space.
  std::int64_t find(const std::uint8_t* occupations) const;

private:
  std::uint64_t key(const std::uint8_t* occupations) const;

  std::size_t modes_;
  int cutoff_;
  std::vector<std::uint8_t> states_;
  std::vector<int> totals_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

class FockState {
public:
  using Matrix = Eigen::MatrixXcd;

  explicit FockState(int cutoff = 4);
  static FockState vacuum(const std::vector<std::string>& modes, int cutoff);
  // Product of thermal states, each P(n) = nbar^n/(nbar+1)^{n+1}, restricted to the truncated
  // space and renormalized.
  static FockState thermal(const std::vector<std::string>& modes, const std::vector<double>& nbar, int cutoff);

  int cutoff() const { return cutoff_; }
  const std::vector<std::string>& modes() const { return modes_; }
  const FockBasis& basis() const { return *basis_; }
  const Matrix& rho() const { return rho_; }
  std::size_t mode_index(const std::string& mode) const;
  bool has_mode(const std::string& mode) const;

  void add_mode(const std::string& mode);
  void trace_out(const std::string& mode);
  void squeeze(const std::string& a, const std::string& b, double p, double phase);
  void beam_splitter(const std::string& a, const std::string& b, double transmissivity, double phase);
  void phase(const std::string& mode, double phi);
  void loss(const std::string& mode, double survival);
  // Quantum-limited amplifier with gain G >= 1.
  void amplify(const std::string& mode, double gain);
  // Thermal-loss channel, realized as loss(survival/G) followed by amplify(G), G = 1 + (1-survival) n_env.
  void thermal_loss(const std::string& mode, double survival, double n_env);
  void thermal_noise(const std::string& mode, double added, double epsilon = 0.01);
  void apply(const Operation& op);

  double trace() const;
  // Probability mass lost to truncation, 1 - trace.
  double truncation_deficit() const { return 1.0 - trace(); }
  double mean_photon_number(const std::string& mode) const;
  // P(n_a = na, n_b = nb) from the diagonal.
  double joint_probability(const std::vector<std::pair<std::string, int>>& occupations) const;
  double hermiticity_error() const;
  double min_eigenvalue() const;

  // Projects the mode onto n >= 1 (unnormalized).
  void project_click(const std::string& mode);
  void normalize();
  // Reduced density matrix on the listed modes, in the listed order.
  FockState reduced(const std::vector<std::string>& keep) const;

  // Pattern probabilities by direct summation over the diagonal; the truncation deficit is assigned
  // to the all-click pattern so the table matches vacuum-projection inclusion-exclusion.
  OutcomeDistribution click_distribution(const std::vector<Detector>& detectors) const;

  // Text dump: header line with N and mode labels, then one "i j re im" line per non-zero entry.
  void dump(std::ostream& out) const;

private:
  FockState(std::vector<std::string> modes, int cutoff);
  // Applies a unitary acting on two modes, given as output amplitudes for every local input pair.
  template <class LocalMap>
  void apply_two_mode(std::size_t ma, std::size_t mb, const LocalMap& local);
  // rho -> sum_k K_k rho K_k^dag with single-mode Kraus elements shifting n by `shift(k)`.
  template <class Element>
  void apply_kraus(std::size_t mode, int count, int direction, const Element& element);

  int cutoff_;
  std::vector<std::string> modes_;
  std::shared_ptr<const FockBasis> basis_;
  Matrix rho_;
};

}  // namespace phonon::fock
