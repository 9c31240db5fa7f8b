#include "phonon/sampler.hpp"

#include <algorithm>
#include <ostream>
#include <thread>

#include "phonon/errors.hpp"
#include "phonon/model.hpp"

namespace phonon {

std::uint64_t SampledCounts::all_click(std::uint32_t mask) const {
  std::uint64_t n = 0;
  for (std::uint32_t p = 0; p < counts.size(); ++p)
    if ((p & mask) == mask) n += counts[p];
  return n;
}

SampledCounts& SampledCounts::operator+=(const SampledCounts& other) {
  if (counts.size() < other.counts.size()) counts.resize(other.counts.size(), 0);
  for (std::size_t i = 0; i < other.counts.size(); ++i) counts[i] += other.counts[i];
  trials += other.trials;
  records.insert(records.end(), other.records.begin(), other.records.end());
  return *this;
}

PatternSampler::PatternSampler(std::size_t patterns, double no_click_floor, double write_jitter_fwhm,
                               double read_jitter_fwhm, Conditional conditional)
    : patterns_(patterns), floor_(no_click_floor), write_fwhm_(write_jitter_fwhm), read_fwhm_(read_jitter_fwhm),
      conditional_(std::move(conditional)) {
  if (patterns_ == 0) throw ValidationError("sampler: no patterns");
}

PatternSampler::PatternSampler(const std::vector<double>& probabilities)
    : patterns_(probabilities.size()), floor_(probabilities.empty() ? 0.0 : probabilities[0]) {
  if (patterns_ == 0) throw ValidationError("sampler: no patterns");
  fixed_cdf_.resize(patterns_);
  double acc = 0.0;
  for (std::size_t i = 0; i < patterns_; ++i) {
    if (!(probabilities[i] >= 0.0)) throw NumericalError("sampler: negative pattern probability");
    acc += probabilities[i];
    fixed_cdf_[i] = acc;
  }
}

std::uint32_t PatternSampler::invert(const std::vector<double>& probabilities, double u) {
  // Probabilities need not sum to exactly one; the remainder goes to the last pattern.
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return static_cast<std::uint32_t>(i);
  }
  return static_cast<std::uint32_t>(probabilities.size() - 1);
}

SampledCounts PatternSampler::run_range(std::uint64_t begin, std::uint64_t end, const Options& options) const {
  SampledCounts out;
  out.trials = end - begin;
  out.counts.assign(patterns_, 0);
  std::vector<double> probabilities;
  const SplitMix64::Streams streams(options.seed, options.stream);
  std::uint64_t empty = 0;
  for (std::uint64_t trial = begin; trial < end; ++trial) {
    SplitMix64 rng = streams.at(trial);
    const double u = rng.uniform();
    if (u < floor_) {
      ++empty;
      continue;
    }
    std::uint32_t pattern;
    double jw = 0.0, jr = 0.0;
    if (conditional_) {
      jw = sample_phase_jitter(rng, write_fwhm_);
      jr = sample_phase_jitter(rng, read_fwhm_);
      conditional_(jw, jr, probabilities);
      pattern = invert(probabilities, u);
    } else {
      const auto it = std::upper_bound(fixed_cdf_.begin(), fixed_cdf_.end() - 1, u);
      pattern = static_cast<std::uint32_t>(it - fixed_cdf_.begin());
    }
    ++out.counts[pattern];
    if (options.keep_records && pattern != 0 && out.records.size() < options.max_records)
      out.records.push_back(ClickRecord{trial, pattern, jw, jr});
  }
  out.counts[0] += empty;
  return out;
}

SampledCounts PatternSampler::run(std::uint64_t first_trial, std::uint64_t trials, const Options& options) const {
  const std::uint64_t workers =
      std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(options.workers, 1)), 1, std::max<std::uint64_t>(trials, 1));
  if (workers == 1) return run_range(first_trial, first_trial + trials, options);

  std::vector<SampledCounts> parts(workers);
  std::vector<std::thread> threads;
  const std::uint64_t chunk = trials / workers, extra = trials % workers;
  std::uint64_t begin = first_trial;
  for (std::uint64_t w = 0; w < workers; ++w) {
    const std::uint64_t end = begin + chunk + (w < extra ? 1 : 0);
    threads.emplace_back([this, &parts, &options, w, begin, end] { parts[w] = run_range(begin, end, options); });
    begin = end;
  }
  for (auto& t : threads) t.join();

  SampledCounts out;
  out.counts.assign(patterns_, 0);
  for (const auto& p : parts) out += p;
  // Ranges are contiguous and joined in order, so records are already sorted; the cap applies to the union.
  if (out.records.size() > options.max_records) out.records.resize(options.max_records);
  return out;
}

void write_click_records(std::ostream& out, const std::vector<ClickRecord>& records,
                         const std::vector<std::string>& detector_labels) {
  out << "# trial\twindow\tdetector\twrite_jitter\tread_jitter\n";
  out.precision(17);
  for (const auto& r : records) {
    for (std::size_t d = 0; d < detector_labels.size(); ++d) {
      if (!(r.pattern >> d & 1u)) continue;
      const std::string& label = detector_labels[d];
      const auto slash = label.rfind('/');
      out << r.trial << '\t' << label.substr(0, slash) << '\t'
          << (slash == std::string::npos ? std::string() : label.substr(slash + 1)) << '\t' << r.write_jitter << '\t'
          << r.read_jitter << '\n';
    }
  }
}

}  // namespace phonon
