#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "phonon/circuit.hpp"
#include "phonon/rng.hpp"

namespace phonon {

// One trial with at least one click.
struct ClickRecord {
  std::uint64_t trial = 0;
  std::uint32_t pattern = 0;
  double write_jitter = 0.0;
  double read_jitter = 0.0;
};

struct SampledCounts {
  std::uint64_t trials = 0;
  // counts[pattern]; counts[0] are trials without clicks.
  std::vector<std::uint64_t> counts;
  // Present only when records were requested; sorted by trial.
  std::vector<ClickRecord> records;

  std::uint64_t count(std::uint32_t pattern) const { return counts.at(pattern); }
  // Trials where every detector in mask clicked.
  std::uint64_t all_click(std::uint32_t mask) const;
  SampledCounts& operator+=(const SampledCounts& other);
};

// Draws click patterns trial by trial. Each trial uses its own generator
// SplitMix64::for_trial(seed, trial, stream): one uniform selects the pattern by inverting the
// cumulative distribution, and jitter phases are drawn only when the trial is not trivially empty.
class PatternSampler {
public:
  // Returns the pattern distribution for the given jitter draw.
  using Conditional = std::function<void(double write_jitter, double read_jitter, std::vector<double>& probabilities)>;

  struct Options {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int workers = 1;
    bool keep_records = false;
    // Records beyond this count are dropped (histogram counts are unaffected).
    std::size_t max_records = 1000000;
  };

  // `no_click_floor` must be a lower bound on P(no click) over all jitter values; trials whose
  // uniform falls below it are empty without evaluating `conditional`.
  PatternSampler(std::size_t patterns, double no_click_floor, double write_jitter_fwhm, double read_jitter_fwhm,
                 Conditional conditional);
  // Phase-independent distribution.
  explicit PatternSampler(const std::vector<double>& probabilities);

  SampledCounts run(std::uint64_t first_trial, std::uint64_t trials, const Options& options) const;

private:
  SampledCounts run_range(std::uint64_t begin, std::uint64_t end, const Options& options) const;
  static std::uint32_t invert(const std::vector<double>& probabilities, double u);

  std::size_t patterns_;
  double floor_;
  double write_fwhm_ = 0.0;
  double read_fwhm_ = 0.0;
  Conditional conditional_;
  std::vector<double> fixed_cdf_;
};

// Columnar text: header, then one "trial window detector write_jitter read_jitter" row per click.
void write_click_records(std::ostream& out, const std::vector<ClickRecord>& records,
                         const std::vector<std::string>& detector_labels);

}  // namespace phonon
