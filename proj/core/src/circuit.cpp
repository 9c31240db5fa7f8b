#include "phonon/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "phonon/errors.hpp"

namespace phonon {

Circuit& Circuit::add_mode(std::string mode) {
  ops_.emplace_back(AddMode{std::move(mode)});
  return *this;
}

Circuit& Circuit::trace_out(std::string mode) {
  ops_.emplace_back(TraceOut{std::move(mode)});
  return *this;
}

Circuit& Circuit::squeeze(std::string a, std::string b, double p, double phase) {
  if (!(p >= 0.0 && p < 1.0)) throw ValidationError("squeeze: p must be in [0, 1)");
  ops_.emplace_back(Squeeze{std::move(a), std::move(b), p, phase});
  return *this;
}

Circuit& Circuit::beam_splitter(std::string a, std::string b, double transmissivity, double phase) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0))
    throw ValidationError("beam splitter: transmissivity must be in [0, 1]");
  ops_.emplace_back(BeamSplitter{std::move(a), std::move(b), transmissivity, phase});
  return *this;
}

Circuit& Circuit::phase(std::string mode, double phase) {
  ops_.emplace_back(PhaseShift{std::move(mode), phase});
  return *this;
}

Circuit& Circuit::loss(std::string mode, double survival) { return thermal_loss(std::move(mode), survival, 0.0); }

Circuit& Circuit::thermal_loss(std::string mode, double survival, double n_env) {
  if (!(survival >= 0.0 && survival <= 1.0)) throw ValidationError("loss: survival must be in [0, 1]");
  if (!(n_env >= 0.0) || !std::isfinite(n_env)) throw ValidationError("thermal loss: n_env must be >= 0");
  ops_.emplace_back(ThermalLoss{std::move(mode), survival, n_env});
  return *this;
}

Circuit& Circuit::thermal_noise(std::string mode, double added, double epsilon) {
  if (!(added >= 0.0)) throw ValidationError("thermal noise: added occupancy must be >= 0");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("thermal noise: epsilon must be in (0, 1]");
  if (added == 0.0) return *this;
  return thermal_loss(std::move(mode), 1.0 - epsilon, added / epsilon);
}

Circuit& Circuit::append(const Circuit& other) {
  ops_.insert(ops_.end(), other.ops_.begin(), other.ops_.end());
  return *this;
}

std::size_t Circuit::peak_mode_count() const {
  std::size_t live = 0, peak = 0;
  for (const auto& op : ops_) {
    if (std::holds_alternative<AddMode>(op)) peak = std::max(peak, ++live);
    else if (std::holds_alternative<TraceOut>(op) && live > 0) --live;
  }
  return peak;
}

OutcomeDistribution::OutcomeDistribution(std::vector<std::string> labels, std::vector<double> probabilities)
    : labels_(std::move(labels)), probs_(std::move(probabilities)) {
  if (probs_.size() != (std::size_t{1} << labels_.size()))
    throw ValidationError("outcome distribution: probability table does not match detector count");
}

std::size_t OutcomeDistribution::index_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown detector '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

double OutcomeDistribution::all_click(std::uint32_t mask) const {
  double s = 0.0;
  for (std::uint32_t k = 0; k < probs_.size(); ++k)
    if ((k & mask) == mask) s += probs_[k];
  return s;
}

double OutcomeDistribution::none_click(std::uint32_t mask) const {
  double s = 0.0;
  for (std::uint32_t k = 0; k < probs_.size(); ++k)
    if ((k & mask) == 0) s += probs_[k];
  return s;
}

double OutcomeDistribution::total() const {
  double s = 0.0;
  for (double p : probs_) s += p;
  return s;
}

OutcomeDistribution OutcomeDistribution::with_extra_clicks(const std::vector<double>& q) const {
  if (q.size() != labels_.size()) throw ValidationError("extra click list does not match detector count");
  std::vector<double> cur = probs_;
  // One detector at a time: a silent detector turns on with probability q.
  for (std::size_t d = 0; d < q.size(); ++d) {
    if (q[d] == 0.0) continue;
    const std::uint32_t bit = 1u << d;
    for (std::uint32_t k = 0; k < cur.size(); ++k) {
      if (k & bit) continue;
      const double moved = cur[k] * q[d];
      cur[k] -= moved;
      cur[k | bit] += moved;
    }
  }
  return OutcomeDistribution(labels_, std::move(cur));
}

OutcomeDistribution OutcomeDistribution::marginal(const std::vector<std::size_t>& keep) const {
  std::vector<std::string> labels;
  for (std::size_t i : keep) labels.push_back(labels_.at(i));
  std::vector<double> out(std::size_t{1} << keep.size(), 0.0);
  for (std::uint32_t k = 0; k < probs_.size(); ++k) {
    std::uint32_t m = 0;
    for (std::size_t j = 0; j < keep.size(); ++j)
      if (k & (1u << keep[j])) m |= 1u << j;
    out[m] += probs_[k];
  }
  return OutcomeDistribution(std::move(labels), std::move(out));
}

OutcomeDistribution OutcomeDistribution::mixture(const std::vector<OutcomeDistribution>& parts,
                                                 const std::vector<double>& weights) {
  if (parts.empty() || parts.size() != weights.size()) throw ValidationError("mixture: mismatched inputs");
  std::vector<double> out(parts.front().probs_.size(), 0.0);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].labels_ != parts.front().labels_) throw ValidationError("mixture: detector labels differ");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += weights[i] * parts[i].probs_[k];
  }
  return OutcomeDistribution(parts.front().labels_, std::move(out));
}

std::vector<double> patterns_from_no_click(const std::vector<double>& q_none) {
  // P(click set C, silent set ~C) = sum_{U subset C} (-1)^{|U|} Q(~C | U): a Moebius inversion,
  // done in place one detector at a time.
  const std::size_t n = q_none.size();
  std::size_t detectors = 0;
  while ((std::size_t{1} << detectors) < n) ++detectors;
  // Index by silent set first, then flip to click-set indexing.
  std::vector<double> f(n);
  const std::uint32_t full = static_cast<std::uint32_t>(n - 1);
  for (std::uint32_t silent = 0; silent < n; ++silent) f[silent] = q_none[silent];
  for (std::size_t d = 0; d < detectors; ++d) {
    const std::uint32_t bit = 1u << d;
    for (std::uint32_t s = 0; s < n; ++s)
      if (!(s & bit)) f[s] -= f[s | bit];
  }
  std::vector<double> out(n);
  for (std::uint32_t silent = 0; silent < n; ++silent) out[full & ~silent] = f[silent];
  return out;
}

}  // namespace phonon
