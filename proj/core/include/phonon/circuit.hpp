#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "phonon/rng.hpp"

namespace phonon {

// Two-mode squeezing with p = tanh^2 r: a' = cosh r a + e^{i phase} sinh r b^dag.
struct Squeeze {
  std::string a, b;
  double p = 0.0;
  double phase = 0.0;
};

// a' = cos t a + e^{i phase} sin t b, b' = -e^{-i phase} sin t a + cos t b, transmissivity = cos^2 t.
struct BeamSplitter {
  std::string a, b;
  double transmissivity = 1.0;
  double phase = 0.0;
};

// |n> -> e^{i n phase} |n>.
struct PhaseShift {
  std::string mode;
  double phase = 0.0;
};

// Mixes the mode with a thermal environment: survival eta, environment occupation n_env.
// n_env = 0 is pure loss.
struct ThermalLoss {
  std::string mode;
  double survival = 1.0;
  double n_env = 0.0;
};

struct AddMode {
  std::string mode;
};

struct TraceOut {
  std::string mode;
};

using Operation = std::variant<Squeeze, BeamSplitter, PhaseShift, ThermalLoss, AddMode, TraceOut>;

class Circuit {
public:
  Circuit& add_mode(std::string mode);
  Circuit& trace_out(std::string mode);
  Circuit& squeeze(std::string a, std::string b, double p, double phase = 0.0);
  Circuit& beam_splitter(std::string a, std::string b, double transmissivity, double phase = 0.0);
  Circuit& phase(std::string mode, double phase);
  Circuit& loss(std::string mode, double survival);
  Circuit& thermal_loss(std::string mode, double survival, double n_env);
  // Adds occupancy dn through a weakly coupled hot bath (survival 1 - epsilon, n_env = dn / epsilon).
  Circuit& thermal_noise(std::string mode, double added, double epsilon = 0.01);
  Circuit& append(const Circuit& other);

  const std::vector<Operation>& operations() const { return ops_; }
  std::size_t size() const { return ops_.size(); }
  // Largest number of simultaneously registered modes, starting from no modes.
  std::size_t peak_mode_count() const;

private:
  std::vector<Operation> ops_;
};

// Threshold detector: clicks if any of its modes holds at least one quantum after the
// efficiency loss, or independently with probability extra_click (dark counts, leakage).
struct Detector {
  std::string label;
  std::vector<std::string> modes;
  double efficiency = 1.0;
  double extra_click = 0.0;
};

// Exact probabilities over click patterns; bit i of the pattern index is detector i.
class OutcomeDistribution {
public:
  OutcomeDistribution() = default;
  OutcomeDistribution(std::vector<std::string> labels, std::vector<double> probabilities);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& probabilities() const { return probs_; }
  std::size_t detector_count() const { return labels_.size(); }
  std::size_t index_of(const std::string& label) const;

  double probability(std::uint32_t pattern) const { return probs_.at(pattern); }
  // P(every detector in mask clicks), other detectors unconstrained.
  double all_click(std::uint32_t mask) const;
  // P(no detector in mask clicks).
  double none_click(std::uint32_t mask) const;
  double total() const;

  // Folds independent extra clicks q_i into the pattern probabilities.
  OutcomeDistribution with_extra_clicks(const std::vector<double>& q) const;
  // Marginal over the listed detectors, in the given order.
  OutcomeDistribution marginal(const std::vector<std::size_t>& keep) const;

  // Convex combination with weights summing to one; labels must agree.
  static OutcomeDistribution mixture(const std::vector<OutcomeDistribution>& parts, const std::vector<double>& weights);

private:
  std::vector<std::string> labels_;
  std::vector<double> probs_;
};

// Common interface of the Fock and Gaussian engines.
class Engine {
public:
  virtual ~Engine() = default;
  virtual std::string name() const = 0;
  // Runs the circuit from an empty register and returns the click distribution of the detectors,
  // including efficiencies and extra clicks.
  virtual OutcomeDistribution evaluate(const Circuit& circuit, const std::vector<Detector>& detectors) const = 0;
};

std::unique_ptr<Engine> make_fock_engine(int truncation);
std::unique_ptr<Engine> make_gaussian_engine();

// Vacuum-subset probabilities Q(S) (bit set = detector in S, Q(0) = 1) to full pattern probabilities.
std::vector<double> patterns_from_no_click(const std::vector<double>& q_none);

}  // namespace phonon
