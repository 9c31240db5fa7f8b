#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "phonon/model.hpp"
#include "phonon/protocol.hpp"

namespace phonon::analysis {

struct AnalysisResult {
  double value = 0.0;
  double sigma = 0.0;
  std::string method;
  // sha256 of the inputs, for results files.
  std::string digest;
  // Set when the estimate is undefined or degenerate; `note` says why.
  bool flagged = false;
  std::string note;
};

// n[k][l]: events with a click on write detector k and read detector l.
struct CoincidenceTable {
  std::array<std::array<double, 2>, 2> n = {{{0.0, 0.0}, {0.0, 0.0}}};
  std::array<double, 2> write_singles = {0.0, 0.0};
  std::array<double, 2> read_singles = {0.0, 0.0};
  double trials = 0.0;

  double total() const { return n[0][0] + n[0][1] + n[1][0] + n[1][1]; }
  void validate() const;
};

// Click counts of one write window and one read window; a window clicks when any of its detectors does.
struct WindowCounts {
  double write = 0.0;
  double read = 0.0;
  double coincidences = 0.0;
  double trials = 0.0;
};

AnalysisResult g2_cross(double write_singles, double read_singles, double coincidences, double trials);
AnalysisResult g2_cross(const WindowCounts& counts);

AnalysisResult correlation_E(const CoincidenceTable& table);

// |E0 - E1 + E2 + E3| for settings (w0,r0), (w1,r0), (w0,r1), (w1,r1).
AnalysisResult chsh_S(const std::array<AnalysisResult, 4>& e);

// Largest |E| over the measured points.
AnalysisResult visibility_max(const std::vector<AnalysisResult>& e);

AnalysisResult witness_R(const AnalysisResult& visibility, const AnalysisResult& g2_ee, const AnalysisResult& g2_ll);
// R + k sigma < 1.
bool entangled(const AnalysisResult& r, double k);

// Thermal occupancy from Stokes and anti-Stokes rates at equal pulse energy.
AnalysisResult nth_from_asymmetry(const AnalysisResult& stokes, const AnalysisResult& anti_stokes);
// Same from raw click counts (Poisson errors).
AnalysisResult nth_from_counts(double stokes_counts, double anti_stokes_counts);

// Fits a exp(-t / T1) to the points with t >= window_start. `sigma` may be empty (unit weights).
AnalysisResult fit_exponential(const std::vector<double>& t, const std::vector<double>& y,
                               const std::vector<double>& sigma = {}, double window_start = 1e-6);

// E(phi) = offset + a cos(phi) + b sin(phi), weighted linear least squares.
struct SinusoidFit {
  double offset = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::array<std::array<double, 3>, 3> covariance{};
  double residual_rms = 0.0;

  double amplitude() const;
  double operator()(double phi) const;
  // Zero crossing of the oscillating part with negative slope, in [0, 2 pi).
  double falling_zero() const;
  double falling_zero_sigma() const;
};

SinusoidFit fit_sinusoid(const std::vector<double>& phi, const std::vector<double>& e,
                         const std::vector<double>& sigma = {});

struct ChshCalibration {
  SinusoidFit curve0;  // phi_r = phi_r0
  SinusoidFit curve1;  // phi_r = phi_r1
  double phi_0 = 0.0;
  double phi_0_sigma = 0.0;
  double amplitude = 0.0;
  ChshSettings settings;
  double expected_S = 0.0;
  // Offsets of phi_w0, phi_w1 from the nearest of phi_0 +- pi/4 (modulo pi).
  std::array<double, 2> epsilon = {0.0, 0.0};
};

// Fits both curves and returns the phi_w pair maximizing the fitted |S| at phi_r in {phi_r0, phi_r1}.
ChshCalibration fit_sinusoid_and_choose_phases(const std::vector<double>& phi_w, const std::vector<AnalysisResult>& e0,
                                               const std::vector<AnalysisResult>& e1, double phi_r0 = 0.0,
                                               double phi_r1 = kPi / 2.0);

// Bootstrap standard deviation of E by multinomial resampling of the four coincidence classes.
AnalysisResult bootstrap_E(const CoincidenceTable& table, int resamples = 1000, std::uint64_t seed = 0);

// Tables from run results. With `exact` the expected counts (probability x trials) are used.
WindowCounts window_counts(const protocol::ExperimentResult& result, std::size_t setting, protocol::Window write,
                           protocol::Window read, bool exact, double trials = 0.0);
CoincidenceTable coincidence_table(const protocol::ExperimentResult& result, std::size_t setting,
                                   protocol::Window write = protocol::Window::WriteOverlap,
                                   protocol::Window read = protocol::Window::ReadOverlap, bool exact = false,
                                   double trials = 0.0);

}  // namespace phonon::analysis
