#pragma once

#include <cstdint>
#include <limits>

namespace phonon {

// Counter-based stream: every (seed, trial, stream) triple yields an independent,
// reproducible sequence, so results do not depend on how trials are scheduled.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state = 0) : state_(state) {}

  static SplitMix64 for_trial(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream = 0) {
    return Streams(seed, stream).at(trial);
  }

  // for_trial with the per-(seed, stream) part computed once.
  class Streams {
  public:
    Streams(std::uint64_t seed, std::uint64_t stream)
        : base_(mix(seed ^ 0x6a09e667f3bcc909ULL)), key_(mix(stream + 0x3c6ef372fe94f82bULL)) {}
    SplitMix64 at(std::uint64_t trial) const { return SplitMix64(mix(base_ + trial) ^ key_); }

  private:
    std::uint64_t base_, key_;
  };

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return finalize(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    return finalize(z + 0x9e3779b97f4a7c15ULL);
  }

private:
  static constexpr std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace phonon
