#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "phonon/model.hpp"
#include "phonon/rng.hpp"

namespace phonon::waveguide {

struct SpectralMode {
  double omega = 0.0;  // rad/s
  std::complex<double> amplitude{1.0, 0.0};
};

struct ModeSpectrum {
  std::vector<SpectralMode> modes;
  double gamma = 0.0;  // energy damping rate, 1/T1

  void validate() const;
  double total_weight() const;
};

struct FsrStatistics {
  double mean = 7.94e6;  // Hz
  double std = 0.0;      // Hz
  int mode_count = 12;

  void validate() const;
};

// b(t) = sum_k A_k exp(-i w_k t - gamma t / 2), returned as |b(t)|^2 / |b(0)|^2.
std::vector<double> mode_sum_envelope(const ModeSpectrum& spectrum, const std::vector<double>& times);

// Normalized first-order coherence sum_k |A_k|^2 exp(-i w_k dt - gamma |dt|) / sum_k |A_k|^2.
std::complex<double> g1(const ModeSpectrum& spectrum, double delay);

// 1 + |g1|^2 for a stationary thermal field.
std::vector<double> g2_tau_curve(const ModeSpectrum& spectrum, const std::vector<double>& delays);

// Modes spaced by the statistics' FSR (each spacing drawn from N(mean, std) when rng is given),
// centred on zero. |A_k|^2 follows a Lorentzian of the given FWHM in Hz around the centre of the
// set; envelope_fwhm = 0 gives equal amplitudes.
ModeSpectrum synthetic_spectrum(const FsrStatistics& fsr, double envelope_fwhm, double gamma,
                                SplitMix64* rng = nullptr);
ModeSpectrum sample_jittered_spectrum(const FsrStatistics& fsr, SplitMix64& rng, double envelope_fwhm = 0.0,
                                      double gamma = 0.0);

// Envelope FWHM (Hz) whose Lorentzian gives a zero-delay packet of the given duration in g2 - 1.
double envelope_for_packet(double packet_fwhm);

struct RoundTrip {
  double tau = 0.0;
  double peak_value = 0.0;
  double packet_fwhm = 0.0;
};

// Round-trip time from the first revival of a g2 curve on a sorted delay grid: the earliest
// local maximum above `threshold` away from zero delay, refined by a three-point parabola.
// Packet FWHM is the full width at half maximum of the zero-delay peak of g2 - 1.
RoundTrip extract_round_trip(const std::vector<double>& delays, const std::vector<double>& g2, double threshold = 1.2);

// Uniform grid [start, stop] with the given step.
std::vector<double> grid(double start, double stop, double step);

// Peak of `values` within +-window of each m * period, m = 1..count, refined by a three-point parabola.
std::vector<double> revival_peaks(const std::vector<double>& times, const std::vector<double>& values, double period,
                                  int count, double window);

struct RevivalEntry {
  int index = 0;
  double time = 0.0;
  // exp(-t / T1) at the revival.
  double t1_factor = 0.0;
  // Constant-FSR spectrum with the same damping.
  double constant_fsr = 0.0;
  // Ensemble mean and standard error of the jittered peaks.
  double ensemble_mean = 0.0;
  double ensemble_sem = 0.0;
  // ensemble_mean / t1_factor: the part attributed to FSR dispersion.
  double dispersion_factor = 0.0;
};

struct RevivalBudgetOptions {
  int seeds = 100;
  int revivals = 4;
  double envelope_fwhm = 0.0;
  double time_step = 0.25e-9;
  std::uint64_t seed = 0;
};

// Splits the revival decay into T1 damping and FSR-jitter dephasing over an ensemble of spectra.
std::vector<RevivalEntry> revival_budget(const FsrStatistics& fsr, double t1, const RevivalBudgetOptions& options);

// Spectrum file: one mode per line, "frequency_hz amplitude [phase_rad]"; '#' starts a comment.
ModeSpectrum read_spectrum(std::istream& in, double gamma = 0.0);
ModeSpectrum load_spectrum(const std::string& path, double gamma = 0.0);
void write_curve(std::ostream& out, const std::vector<double>& x, const std::vector<double>& y,
                 const std::string& x_name = "delay_s", const std::string& y_name = "value");

// Spectrum described by a config: the file if given, else a synthetic one.
ModeSpectrum spectrum_from_config(const ExperimentConfig& config);

}  // namespace phonon::waveguide
