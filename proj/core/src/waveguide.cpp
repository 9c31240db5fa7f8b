#include "phonon/waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "phonon/errors.hpp"

namespace phonon::waveguide {

void ModeSpectrum::validate() const {
  if (modes.size() < 2) throw ValidationError("mode spectrum needs at least 2 modes");
  if (!(gamma >= 0.0)) throw ValidationError("mode spectrum damping must be >= 0");
  if (!(total_weight() > 0.0)) throw ValidationError("mode spectrum has zero total weight");
}

double ModeSpectrum::total_weight() const {
  double w = 0.0;
  for (const auto& m : modes) w += std::norm(m.amplitude);
  return w;
}

void FsrStatistics::validate() const {
  if (!(mean > 0.0)) throw ValidationError("FSR mean must be > 0");
  if (!(std >= 0.0)) throw ValidationError("FSR std must be >= 0");
  if (mode_count < 2) throw ValidationError("FSR statistics need at least 2 modes");
}

std::vector<double> mode_sum_envelope(const ModeSpectrum& spectrum, const std::vector<double>& times) {
  spectrum.validate();
  if (!std::is_sorted(times.begin(), times.end())) throw ValidationError("time grid must be sorted");
  std::complex<double> b0 = 0.0;
  for (const auto& m : spectrum.modes) b0 += m.amplitude;
  const double norm0 = std::norm(b0);
  if (!(norm0 > 0.0)) throw NumericalError("mode sum vanishes at t = 0");
  // Frequencies relative to the first mode; a common offset only changes the global phase.
  const double w0 = spectrum.modes.front().omega;
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    std::complex<double> b = 0.0;
    for (const auto& m : spectrum.modes) b += m.amplitude * std::polar(1.0, -(m.omega - w0) * t);
    out.push_back(std::norm(b) * std::exp(-spectrum.gamma * t) / norm0);
  }
  return out;
}

std::complex<double> g1(const ModeSpectrum& spectrum, double delay) {
  const double w0 = spectrum.modes.front().omega;
  std::complex<double> acc = 0.0;
  for (const auto& m : spectrum.modes) acc += std::norm(m.amplitude) * std::polar(1.0, -(m.omega - w0) * delay);
  return acc * std::exp(-spectrum.gamma * std::abs(delay)) / spectrum.total_weight();
}

std::vector<double> g2_tau_curve(const ModeSpectrum& spectrum, const std::vector<double>& delays) {
  spectrum.validate();
  std::vector<double> out;
  out.reserve(delays.size());
  for (double d : delays) out.push_back(1.0 + std::norm(g1(spectrum, d)));
  return out;
}

ModeSpectrum synthetic_spectrum(const FsrStatistics& fsr, double envelope_fwhm, double gamma, SplitMix64* rng) {
  fsr.validate();
  if (!(envelope_fwhm >= 0.0)) throw ValidationError("envelope FWHM must be >= 0");
  std::vector<double> freq(fsr.mode_count, 0.0);
  std::normal_distribution<double> spacing(fsr.mean, fsr.std);
  for (int k = 1; k < fsr.mode_count; ++k) {
    double s = fsr.mean;
    if (rng && fsr.std > 0.0) {
      // Non-positive spacings would reorder the modes; redraw (vanishingly rare at measured FSR statistics).
      do s = spacing(*rng);
      while (s <= 0.0);
    }
    freq[k] = freq[k - 1] + s;
  }
  const double centre = 0.5 * (freq.front() + freq.back());
  ModeSpectrum out;
  out.gamma = gamma;
  for (double f : freq) {
    const double x = f - centre;
    const double weight = envelope_fwhm > 0.0 ? 1.0 / (1.0 + 4.0 * x * x / (envelope_fwhm * envelope_fwhm)) : 1.0;
    out.modes.push_back(SpectralMode{2.0 * kPi * x, {std::sqrt(weight), 0.0}});
  }
  return out;
}

ModeSpectrum sample_jittered_spectrum(const FsrStatistics& fsr, SplitMix64& rng, double envelope_fwhm, double gamma) {
  return synthetic_spectrum(fsr, envelope_fwhm, gamma, &rng);
}

double envelope_for_packet(double packet_fwhm) {
  if (!(packet_fwhm > 0.0)) throw ValidationError("packet FWHM must be > 0");
  // |g1|^2 = exp(-2 pi G |t|) for a Lorentzian of FWHM G.
  return std::log(2.0) / (kPi * packet_fwhm);
}

std::vector<double> grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) throw ValidationError("grid needs step > 0 and stop >= start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = start + step * static_cast<double>(i);
  return out;
}

RoundTrip extract_round_trip(const std::vector<double>& delays, const std::vector<double>& g2, double threshold) {
  if (delays.size() != g2.size() || delays.size() < 3) throw ValidationError("g2 curve needs >= 3 matching points");
  if (!std::is_sorted(delays.begin(), delays.end())) throw ValidationError("delay grid must be sorted");
  const std::size_t n = delays.size();
  const auto zero = static_cast<std::size_t>(
      std::min_element(delays.begin(), delays.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) -
      delays.begin());

  RoundTrip out;
  // Zero-delay packet width.
  const double half = 0.5 * (g2[zero] - 1.0);
  const auto crossing = [&](std::size_t from, int dir) -> double {
    std::size_t i = from;
    while (true) {
      const std::size_t j = i + dir;
      if (dir < 0 ? i == 0 : j >= n) return std::nan("");
      if (g2[j] - 1.0 < half) {
        const double f = (g2[i] - 1.0 - half) / (g2[i] - g2[j]);
        return delays[i] + f * (delays[j] - delays[i]);
      }
      i = j;
    }
  };
  const double right = crossing(zero, +1);
  const double left = crossing(zero, -1);
  if (std::isnan(right)) throw NumericalError("zero-delay peak does not fall to half maximum");
  out.packet_fwhm = std::isnan(left) ? 2.0 * (right - delays[zero]) : right - left;

  // First revival: skip the zero-delay peak, then take the earliest local maximum above threshold.
  std::size_t i = zero;
  while (i + 1 < n && g2[i] >= threshold) ++i;
  for (; i + 1 < n; ++i) {
    if (i == 0 || g2[i] < threshold) continue;
    if (g2[i] >= g2[i - 1] && g2[i] > g2[i + 1]) break;
  }
  if (i + 1 >= n) throw NumericalError("no revival found above threshold");
  const double y0 = g2[i - 1], y1 = g2[i], y2 = g2[i + 1];
  const double denom = y0 - 2.0 * y1 + y2;
  const double shift = denom < 0.0 ? 0.5 * (y0 - y2) / denom : 0.0;
  const double step = 0.5 * (delays[i + 1] - delays[i - 1]);
  out.tau = delays[i] + shift * step;
  out.peak_value = y1 - 0.25 * (y0 - y2) * shift;
  return out;
}

std::vector<double> revival_peaks(const std::vector<double>& times, const std::vector<double>& values, double period,
                                  int count, double window) {
  std::vector<double> out;
  for (int m = 1; m <= count; ++m) {
    const double centre = m * period;
    std::size_t best = times.size();
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - centre) <= window && (best == times.size() || values[i] > values[best])) best = i;
    if (best == times.size()) throw ValidationError("time grid does not cover revival " + std::to_string(m));
    double peak = values[best];
    // Parabolic vertex through the grid maximum and its neighbours.
    if (best > 0 && best + 1 < times.size()) {
      const double y0 = values[best - 1], y1 = values[best], y2 = values[best + 1];
      const double curv = y0 - 2.0 * y1 + y2;
      if (curv < 0.0) peak = y1 - (y2 - y0) * (y2 - y0) / (8.0 * curv);
    }
    out.push_back(peak);
  }
  return out;
}

std::vector<RevivalEntry> revival_budget(const FsrStatistics& fsr, double t1, const RevivalBudgetOptions& options) {
  fsr.validate();
  if (!(t1 > 0.0)) throw ValidationError("T1 must be > 0");
  if (options.seeds < 2 || options.revivals < 1) throw ValidationError("revival budget needs >= 2 seeds, >= 1 revival");
  const double gamma = 1.0 / t1;
  const double period = 1.0 / fsr.mean;
  const double window = 0.25 * period;
  const auto times = grid(0.0, options.revivals * period + window, options.time_step);

  const ModeSpectrum flat = synthetic_spectrum(fsr, options.envelope_fwhm, gamma);
  std::vector<double> revival_times;
  for (int m = 1; m <= options.revivals; ++m) revival_times.push_back(m * period);
  const auto control = mode_sum_envelope(flat, revival_times);

  std::vector<double> sum(options.revivals, 0.0), sum2(options.revivals, 0.0);
  for (int s = 0; s < options.seeds; ++s) {
    SplitMix64 rng = SplitMix64::for_trial(options.seed, static_cast<std::uint64_t>(s));
    const ModeSpectrum spectrum = sample_jittered_spectrum(fsr, rng, options.envelope_fwhm, gamma);
    const auto peaks = revival_peaks(times, mode_sum_envelope(spectrum, times), period, options.revivals, window);
    for (int m = 0; m < options.revivals; ++m) {
      sum[m] += peaks[m];
      sum2[m] += peaks[m] * peaks[m];
    }
  }

  std::vector<RevivalEntry> out;
  const double n = options.seeds;
  for (int m = 0; m < options.revivals; ++m) {
    RevivalEntry e;
    e.index = m + 1;
    e.time = (m + 1) * period;
    e.t1_factor = std::exp(-e.time / t1);
    e.constant_fsr = control[m];
    e.ensemble_mean = sum[m] / n;
    const double var = std::max(0.0, (sum2[m] - n * e.ensemble_mean * e.ensemble_mean) / (n - 1.0));
    e.ensemble_sem = std::sqrt(var / n);
    e.dispersion_factor = e.ensemble_mean / e.t1_factor;
    out.push_back(e);
  }
  return out;
}

ModeSpectrum read_spectrum(std::istream& in, double gamma) {
  ModeSpectrum out;
  out.gamma = gamma;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double f, a, phase = 0.0;
    if (!(fields >> f)) continue;
    if (!(fields >> a)) throw ValidationError("spectrum line " + std::to_string(line_no) + ": expected amplitude");
    fields >> phase;
    out.modes.push_back(SpectralMode{2.0 * kPi * f, std::polar(a, phase)});
  }
  out.validate();
  return out;
}

ModeSpectrum load_spectrum(const std::string& path, double gamma) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spectrum file '" + path + "'");
  return read_spectrum(in, gamma);
}

void write_curve(std::ostream& out, const std::vector<double>& x, const std::vector<double>& y,
                 const std::string& x_name, const std::string& y_name) {
  if (x.size() != y.size()) throw ValidationError("curve columns differ in length");
  out << "# " << x_name << '\t' << y_name << '\n';
  out.precision(12);
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << '\t' << y[i] << '\n';
}

ModeSpectrum spectrum_from_config(const ExperimentConfig& config) {
  const double gamma = 1.0 / config.waveguide.t1;
  const auto& s = config.spectrum;
  if (!s.file.empty()) return load_spectrum(s.file, gamma);
  const FsrStatistics fsr{s.fsr_mean, s.fsr_std, s.mode_count};
  if (s.fsr_std > 0.0) {
    SplitMix64 rng = SplitMix64::for_trial(config.seed, 0);
    return sample_jittered_spectrum(fsr, rng, s.envelope_fwhm, gamma);
  }
  return synthetic_spectrum(fsr, s.envelope_fwhm, gamma);
}

}  // namespace phonon::waveguide
