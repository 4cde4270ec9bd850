#ifndef MISTORE_BASELINE_HPP
#define MISTORE_BASELINE_HPP

/** @file
 * Refined multiscale entropy, the model-free comparison method: zero-phase
 * Butterworth lowpass, decimation, Sample Entropy, and conversion of the
 * resulting entropy rate into information storage via S = 0.5 ln(2 pi e) - C.
 */

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace mistore {

/// Second-order section b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct IirFilter {
  std::vector<Biquad> sections;
  std::vector<double> feedforward;  ///< expanded numerator b_0..b_n
  std::vector<double> feedback;     ///< expanded denominator, feedback[0] == 1

  /// H(e^{i 2 pi f}) evaluated from the sections.
  std::complex<double> response(double frequency) const;
};

inline constexpr int kButterworthOrder = 6;

/// Digital Butterworth lowpass by bilinear transform of the analog prototype
/// with prewarped cutoff (normalized, cycles per sample). Each section has
/// unit DC gain.
IirFilter butterworth_lowpass(double cutoff, int order = kButterworthOrder);

/// Forward-backward (zero-phase) filtering with odd extension at both ends
/// and steady-state initial conditions.
std::vector<double> filtfilt(const IirFilter& filter, std::span<const double> x);

/// Lowpass at 1/(2 tau) (skipped for tau == 1), then keep x[0], x[tau], ...
/// Output length floor(N / tau).
std::vector<double> decimate(std::span<const double> series, int tau);

enum class ToleranceBasis {
  SeriesSd,      ///< r = r_factor * SD of the analyzed series
  InnovationSd,  ///< r = r_factor * innovation SD of a BIC-selected AR fit
};

struct SampEnConfig {
  int m = 2;
  double r_factor = 0.2;
  ToleranceBasis basis = ToleranceBasis::SeriesSd;

  void validate() const;
};

/// Template pair counts behind a Sample Entropy value.
struct SampEnCounts {
  long long matches_m = 0;       ///< B
  long long matches_m1 = 0;      ///< A
  double tolerance = 0.0;
};

/// Counts pairs (i < j) of length-m templates, i, j in [0, N - m), within
/// Chebyshev distance r (inclusive), and how many of them still match at
/// length m + 1.
SampEnCounts sample_entropy_counts(std::span<const double> series, int m, double tolerance);

/// -ln(A / B); nullopt when A or B is zero or the tolerance degenerates.
std::optional<double> sample_entropy(std::span<const double> series,
                                     const SampEnConfig& config = {});

/// Tolerance r for the series under the configured basis, nullopt if degenerate.
std::optional<double> sampen_tolerance(std::span<const double> series, const SampEnConfig& config);

struct RefinedMseEntry {
  int tau = 1;
  double f_tau = 0.5;
  std::optional<double> sample_entropy;
  std::optional<double> storage;  ///< 0.5 ln(2 pi e) - SampEn
};

std::vector<RefinedMseEntry> refined_mse_storage(std::span<const double> series,
                                                 std::span<const int> taus,
                                                 const SampEnConfig& config = {});

}  // namespace mistore

#endif  // MISTORE_BASELINE_HPP
