#ifndef MISTORE_ESTIMATION_HPP
#define MISTORE_ESTIMATION_HPP

/** @file
 * Identification of ARFI / AR models from a finite series: local Whittle
 * estimate of d, least-squares AR fitting, BIC order selection, and the three
 * analysis modes (eAR, eARd, eARFI).
 *
 * Every estimator subtracts the sample mean first.
 */

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mistore/fracdiff.hpp"

namespace mistore {

struct WhittleEstimate {
  double d = 0.0;
  double stderr_d = 0.0;  ///< 1 / (2 sqrt(m))
  int bandwidth = 0;      ///< m, number of Fourier frequencies used
  std::vector<std::string> warnings;
};

inline constexpr double kDefaultBandwidthExponent = 0.65;

/// Local Whittle estimate of d on [-0.5, 1) using the lowest
/// floor(N^bandwidth_exponent) Fourier frequencies. Requires N >= 64.
WhittleEstimate whittle_d(std::span<const double> series,
                          double bandwidth_exponent = kDefaultBandwidthExponent);

/// The local Whittle objective R(d), exposed for testing.
double whittle_objective(std::span<const double> series, int bandwidth, double d);

struct ArFit {
  std::vector<double> coefficients;  ///< b_1..b_p of x[n] = sum b_k x[n-k] + e[n]
  double sigma2 = 0.0;               ///< RSS / (number of regression rows)
  bool stable = true;
  int rows = 0;                      ///< regression rows used
};

/// Least-squares AR(p) on the (by default mean-removed) series, regressing x[n] on
/// x[n-1..n-p] for n = p..N-1. Requires N > 2p + 1.
ArFit ols_ar(std::span<const double> series, int p, bool remove_mean = true);

struct OrderSelection {
  int p = 0;
  std::vector<double> bic;  ///< bic[i] belongs to order pmin + i
};

/// Argmin over [pmin, pmax] of N' ln(sigma2(p)) + p ln(N'), with every order
/// fitted on the same rows n = pmax..N-1 (N' = N - pmax). Ties go to the
/// smaller order.
OrderSelection select_order_bic(std::span<const double> series, int pmin, int pmax,
                                bool remove_mean = true);

enum class FitMode { EAR, EARD, EARFI };

std::string_view to_string(FitMode mode);
std::optional<FitMode> parse_fit_mode(std::string_view text);

struct FitConfig {
  FitMode mode = FitMode::EARFI;
  int q = kDefaultTruncationLag;
  int pmin = 2;
  int pmax = 16;
  double bandwidth_exponent = kDefaultBandwidthExponent;
  bool remove_mean = true;

  void validate() const;
};

struct FitResult {
  ArfiModel model;          ///< d == 0 for eAR and eARd
  double d_hat = 0.0;       ///< 0 for eAR
  double d_stderr = 0.0;
  int p_selected = 0;
  std::vector<double> bic_curve;
  int n_used = 0;           ///< regression rows of the final AR fit
  std::vector<std::string> warnings;
};

/// Identify a model in the requested mode. Throws a numerical Error when the
/// selected AR fit is unstable.
FitResult fit(std::span<const double> series, const FitConfig& config);

struct Significance {
  double lo = 0.0;
  double hi = 0.0;
  bool significant = false;
};

/// Two-sided normal test of d == 0 at the given level.
Significance d_significance(double d_hat, double stderr_d, double level = 0.05);

}  // namespace mistore

#endif  // MISTORE_ESTIMATION_HPP
