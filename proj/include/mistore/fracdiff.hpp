#ifndef MISTORE_FRACDIFF_HPP
#define MISTORE_FRACDIFF_HPP

/** @file
 * Fractional differencing, lag-polynomial algebra and the truncation of an
 * ARFI(p,d) process to a finite-order autoregression.
 *
 * Lag polynomials follow the autoregressive sign convention
 * B(L) = 1 - sum_k B_k L^k, so a process obeys x[n] = sum_k B_k x[n-k] + e[n].
 */

#include <cstddef>
#include <span>
#include <vector>

namespace mistore {

/// Models whose companion spectral radius reaches 1 - kStabilityMargin are
/// treated as nonstationary everywhere in the library.
inline constexpr double kStabilityMargin = 1e-9;

/// Default truncation lag of the fractional differencing expansion.
inline constexpr int kDefaultTruncationLag = 50;

/// Coefficients G_0..G_q of (1 - L)^d truncated at lag q.
struct FracDiffExpansion {
  double d = 0.0;
  std::vector<double> g;  ///< g[0] == 1

  int q() const { return static_cast<int>(g.size()) - 1; }
};

/// G_0 = 1, G_k = G_{k-1} (k - 1 - d) / k. Requires q >= 1 and finite d.
FracDiffExpansion fracdiff_coefficients(double d, int q);

/// Autoregressive lag polynomial 1 - sum_{k=1..m} b_k L^k. The leading unit
/// coefficient is implicit. Stability is evaluated once at construction from
/// the eigenvalues of the companion matrix.
class ArPolynomial {
 public:
  ArPolynomial();
  explicit ArPolynomial(std::vector<double> b);

  int order() const { return static_cast<int>(b_.size()); }
  std::span<const double> coefficients() const { return b_; }
  double coefficient(int k) const { return b_.at(static_cast<std::size_t>(k - 1)); }

  double spectral_radius() const { return spectral_radius_; }
  bool stable() const { return spectral_radius_ < 1.0 - kStabilityMargin; }

  /// Full lag-polynomial coefficients [1, -b_1, ..., -b_m].
  std::vector<double> lag_coefficients() const;

  /// Same process with trailing zero coefficients removed.
  ArPolynomial trimmed() const;

 private:
  std::vector<double> b_;
  double spectral_radius_ = 0.0;
};

/// Largest root modulus of z^m - b_1 z^{m-1} - ... - b_m.
double companion_spectral_radius(std::span<const double> b);

/// A(L) (1 - L)^d X_n = E_n.
class ArfiModel {
 public:
  /// Validates: sigma2_e > 0, d in (-0.5, 1), A(L) stable.
  ArfiModel(std::vector<double> a, double d, double sigma2_e);

  static ArfiModel white_noise(double sigma2_e = 1.0) { return {{}, 0.0, sigma2_e}; }

  int p() const { return static_cast<int>(a_.size()); }
  std::span<const double> ar() const { return a_; }
  double d() const { return d_; }
  double sigma2_e() const { return sigma2_e_; }

  /// d outside (-0.5, 0.75): accepted, but local Whittle and truncation
  /// quality degrade there.
  bool d_outside_recommended_range() const { return d_ >= 0.75; }

  ArfiModel with_sigma2(double sigma2_e) const { return {a_, d_, sigma2_e}; }
  ArfiModel with_d(double d) const { return {a_, d, sigma2_e_}; }

 private:
  std::vector<double> a_;
  double d_;
  double sigma2_e_;
};

/// Plain discrete convolution.
std::vector<double> convolve(std::span<const double> x, std::span<const double> y);

/// B(L) = A(L) G(L) with G truncated at lag q (q >= 0; q == 0 drops the
/// fractional part). The result has order p + q.
ArPolynomial arfi_to_ar(const ArfiModel& model, int q);

struct FracDiffFiltered {
  std::vector<double> values;  ///< same length as the input
  std::size_t transient = 0;   ///< leading samples computed with zero pre-sample values
};

/// y[n] = sum_{k=0..min(n,q)} G_k x[n-k]. Pre-sample values are taken as zero.
FracDiffFiltered apply_fracdiff_filter(std::span<const double> series, double d, int q);

struct Pole {
  double modulus = 0.0;    ///< in [0, 1)
  double frequency = 0.1;  ///< normalized, in (0, 0.5)
};

/// Product of (1 - 2 rho cos(2 pi f) L + rho^2 L^2) over the conjugate pairs.
ArPolynomial poles_to_ar(std::span<const Pole> poles);

}  // namespace mistore

#endif  // MISTORE_FRACDIFF_HPP
