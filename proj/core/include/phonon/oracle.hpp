#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "phonon/circuit.hpp"
#include "phonon/rng.hpp"

namespace phonon::oracle {

struct Check {
  std::string group;
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  std::string detail;
  bool pass() const { return deviation <= tolerance; }
};

struct Report {
  std::vector<Check> checks;
  bool pass() const;
  // Largest deviation in a group (all groups when empty); 0 if the group has no checks.
  double max_deviation(std::string_view group = {}) const;
  // First failing check, or nullptr.
  const Check* first_failure() const;
  Report& operator+=(const Report& other);
};

struct RandomCircuitSpec {
  std::size_t min_modes = 2;
  std::size_t max_modes = 6;
  double max_p = 0.02;
  double max_nbar = 0.2;
};

struct RandomCase {
  Circuit circuit;
  std::vector<Detector> detectors;
};

// Thermal seeds on some modes, then a random mix of squeezers, beam splitters, phases and losses.
// Every mode belongs to at most one detector.
RandomCase random_circuit(SplitMix64& rng, const RandomCircuitSpec& spec = {});

struct SuiteOptions {
  int circuits = 200;
  int truncation = 5;
  std::uint64_t seed = 1;
  RandomCircuitSpec spec;
  double cross_tolerance = 1e-6;
  double analytic_tolerance = 1e-9;
  // Deliberately wrong read-phase sign, to show that the phase checks catch it.
  bool flip_read_phase = false;
};

// Largest |P_fock - P_gaussian| over all click patterns, per random circuit.
Report cross_engine(const SuiteOptions& options);
// Closed-form limits: noiseless time-bin correlations, herald conditionals, thermal and
// two-mode squeezed click statistics.
Report analytic_limits(const SuiteOptions& options);
Report run_all(const SuiteOptions& options);

}  // namespace phonon::oracle
