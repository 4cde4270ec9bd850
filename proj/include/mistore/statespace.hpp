#ifndef MISTORE_STATESPACE_HPP
#define MISTORE_STATESPACE_HPP

/** @file
 * State-space representations of (filtered, downsampled) autoregressions and
 * the analytic multiscale information storage built on them.
 *
 * The rescaling chain for a scale factor tau is
 *
 *   AR(m) --ar_to_ss--> innovations SS --apply_fir_to_ss--> ARMA(m, r) in SS form
 *         --downsample_ss--> SS with correlated noises
 *         --to_innovations_form (DARE)--> innovations SS at scale tau
 *
 * and S(tau) = 0.5 ln(Sigma_X(tau) / Sigma_E(tau)).
 */

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "mistore/fracdiff.hpp"

namespace mistore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Z[n+1] = B Z[n] + K E[n],  X[n] = C Z[n] + E[n],  var(E) = sigma2_e.
struct InnovationsSS {
  Matrix transition;      ///< B, dim x dim
  RowVector observation;  ///< C, 1 x dim
  Vector gain;            ///< K, dim x 1
  double sigma2_e = 1.0;

  Eigen::Index dim() const { return transition.rows(); }
};

/// Y[n+1] = B Y[n] + W[n],  X[n] = C Y[n] + V[n] with
/// cov(W) = state_noise, var(V) = obs_noise, cov(W, V) = cross_cov.
struct GeneralSS {
  Matrix transition;
  RowVector observation;
  Matrix state_noise;
  double obs_noise = 1.0;
  Vector cross_cov;

  Eigen::Index dim() const { return transition.rows(); }
};

/// FIR taps D_0..D_r with D_0 != 0.
class FirFilter {
 public:
  /// Arbitrary taps; leading and trailing exact zeros are removed first.
  static FirFilter from_taps(std::vector<double> taps, double cutoff);
  static FirFilter identity() { return from_taps({1.0}, 0.5); }

  int order() const { return static_cast<int>(taps_.size()) - 1; }
  std::span<const double> taps() const { return taps_; }
  double cutoff() const { return cutoff_; }
  double dc_gain() const;

 private:
  FirFilter() = default;
  std::vector<double> taps_;
  double cutoff_ = 0.5;
};

/// Default order of the rescaling lowpass filter.
inline constexpr int kDefaultFilterOrder = 48;

/// Hamming-windowed sinc lowpass of even order r, normalized to unit DC gain.
/// Exact sinc zeros at the ends are stripped; cutoff 0.5 yields the identity.
FirFilter design_fir_lowpass(int r, double cutoff);

/// Companion-form innovations model of a stable AR polynomial.
InnovationsSS ar_to_ss(const ArPolynomial& poly, double sigma2_e);

struct SolverReport {
  double residual = 0.0;  ///< relative residual of the defining equation
  int iterations = 0;     ///< doubling steps (or fixed-point steps)
  std::vector<std::string> warnings;
};

struct LyapunovOptions {
  bool check_stability = true;
  double tolerance = 1e-12;
  int max_doublings = 200;
};

/// P = A P A^T + Q by squared Smith doubling. Residual is reported relative
/// to ||Q||_F.
Matrix solve_dlyap(const Matrix& a, const Matrix& q, const LyapunovOptions& options = {},
                   SolverReport* report = nullptr);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& a);

/// Sigma_X = C Omega C^T + Sigma_E with Omega = B Omega B^T + Sigma_E K K^T.
double process_variance(const InnovationsSS& ss, const LyapunovOptions& options = {},
                        SolverReport* report = nullptr);

struct StorageDecomposition {
  double storage = 0.0;              ///< S_X in nats
  double entropy = 0.0;              ///< H_X = 0.5 ln(2 pi e Sigma_X)
  double conditional_entropy = 0.0;  ///< C_X = 0.5 ln(2 pi e Sigma_E)
};

/// 0.5 ln(sigma2_x / sigma2_e).
double storage(double sigma2_x, double sigma2_e);
StorageDecomposition storage_decomposition(double sigma2_x, double sigma2_e);

/// ARMA(m, r) state-space form of the FIR-filtered AR process. The input
/// must be in the companion form produced by ar_to_ss.
InnovationsSS apply_fir_to_ss(const InnovationsSS& ss, const FirFilter& filter);

/// Parameters of the process sampled every tau-th step.
GeneralSS downsample_ss(const InnovationsSS& ss, int tau, bool check_stability = true);

enum class DareMethod {
  Doubling,    ///< structure-preserving doubling; 2^k Riccati steps per iteration
  FixedPoint,  ///< plain Riccati recursion from P = Sigma_W
};

struct DareOptions {
  DareMethod method = DareMethod::Doubling;
  double tolerance = 1e-12;
  int max_doublings = 80;
  int max_iterations = 100000;
  int warn_iterations = 10000;
};

/// Stabilizing solution of
///   P = B P B^T + Sigma_W - (B P C^T + S)(C P C^T + Sigma_V)^{-1}(C P B^T + S^T).
Matrix solve_dare(const GeneralSS& gss, const DareOptions& options = {},
                  SolverReport* report = nullptr);

enum class GainConvention {
  Innovations,  ///< K = (B P C^T + S) / (C P C^T + Sigma_V)
  LiteralSigmaV ///< K = (B P C^T + S) / Sigma_V, kept for comparison only
};

struct InnovationsOptions {
  DareOptions dare;
  GainConvention gain = GainConvention::Innovations;
};

InnovationsSS to_innovations_form(const GeneralSS& gss, const InnovationsOptions& options = {},
                                  SolverReport* report = nullptr);

struct ScaleEntry {
  int tau = 1;
  double f_tau = 0.5;
  double storage = 0.0;
  double sigma2_x = 0.0;
  double sigma2_e = 0.0;
  double lyapunov_residual = 0.0;
  double dare_residual = 0.0;
  int dare_iterations = 0;
};

struct MultiscaleProfile {
  std::vector<ScaleEntry> entries;
  std::vector<std::string> warnings;

  /// Largest Lyapunov or DARE residual over all scales.
  double max_residual() const;
};

struct StorageOptions {
  InnovationsOptions innovations;
  /// Drop trailing zero AR lags before building the state (exact; only the
  /// state dimension changes).
  bool trim_zero_lags = true;
};

/// One scale of the rescaling chain, starting from a companion-form model.
ScaleEntry storage_at_scale(const InnovationsSS& base, const FirFilter& filter, int tau,
                            const StorageOptions& options = {});

/// S(tau) for every requested tau. tau == 1 uses the identity filter, every
/// other scale a lowpass of order r at cutoff 1/(2 tau).
MultiscaleProfile multiscale_storage(const ArfiModel& model, int q, int r,
                                     std::span<const int> taus,
                                     const StorageOptions& options = {});

/// 1..tau_max.
std::vector<int> tau_range(int tau_max);

}  // namespace mistore

#endif  // MISTORE_STATESPACE_HPP
