#include "mistore/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mistore/error.hpp"

namespace mistore {

using Eigen::Index;

namespace {

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

double frobenius(const Matrix& m) { return m.size() == 0 ? 0.0 : m.norm(); }

bool all_finite(const Matrix& m) { return m.size() == 0 || m.allFinite(); }

void require_companion(const InnovationsSS& ss) {
  const Index m = ss.dim();
  bool ok = ss.observation.size() == m && ss.gain.size() == m && ss.transition.cols() == m;
  if (ok && m > 0) {
    ok = ss.gain(0) == 1.0 && (m == 1 || ss.gain.tail(m - 1).isZero(0.0)) &&
         (ss.transition.row(0).array() == ss.observation.array()).all();
    for (Index i = 1; ok && i < m; ++i) {
      for (Index j = 0; j < m; ++j) {
        if (ss.transition(i, j) != (j == i - 1 ? 1.0 : 0.0)) {
          ok = false;
          break;
        }
      }
    }
  }
  if (!ok) throw_invalid("expected a companion-form AR model (see ar_to_ss)");
}

// Relative residual of P = F P F^T + W - k k^T / s with k = F P H^T + S.
double riccati_residual(const GeneralSS& g, const Matrix& p) {
  const Vector k = g.transition * p * g.observation.transpose() + g.cross_cov;
  const double s = (g.observation * p * g.observation.transpose())(0, 0) + g.obs_noise;
  const Matrix rhs =
      g.transition * p * g.transition.transpose() + g.state_noise - (k / s) * k.transpose();
  const double scale = std::max(frobenius(p), frobenius(g.state_noise));
  if (scale == 0.0) return 0.0;
  return frobenius(rhs - p) / scale;
}

Matrix dare_doubling(const GeneralSS& g, const DareOptions& options, SolverReport& report) {
  const Index n = g.dim();
  const double v = g.obs_noise;
  const Vector s_over_v = g.cross_cov / v;

  // Decorrelate the noises, then map the filtering equation onto the control
  // form X = A^T X (I + G X)^{-1} A + Q with A = F~^T, G = H^T H / V, Q = W~.
  Matrix a = (g.transition - s_over_v * g.observation).transpose();
  Matrix gm = g.observation.transpose() * g.observation / v;
  Matrix x = g.state_noise - s_over_v * g.cross_cov.transpose();
  symmetrize(x);

  const Matrix identity = Matrix::Identity(n, n);
  for (int step = 1; step <= options.max_doublings; ++step) {
    Eigen::PartialPivLU<Matrix> lu(identity + gm * x);
    const Matrix inv_a = lu.solve(a);
    const Matrix inv_g = lu.solve(gm);
    Matrix x_next = x + a.transpose() * (x * inv_a);
    Matrix g_next = gm + a * (inv_g * a.transpose());
    Matrix a_next = a * inv_a;
    symmetrize(x_next);
    symmetrize(g_next);
    if (!all_finite(x_next)) throw_numerical("DARE: no convergence");
    const double delta = frobenius(x_next - x);
    x = std::move(x_next);
    gm = std::move(g_next);
    a = std::move(a_next);
    report.iterations = step;
    if (delta <= options.tolerance * frobenius(x)) return x;
  }
  throw_numerical("DARE: no convergence");
}

// Newton (Hewer) steps: with the gain L of the current iterate, the DARE is
// the Lyapunov equation P = (F - L H) P (F - L H)^T + [I -L] Sigma [I -L]^T.
// Doubling alone stalls near 1e-8 relative residual on the filtered models.
Matrix dare_newton_polish(const GeneralSS& g, Matrix p, const DareOptions& options,
                          SolverReport& report) {
  LyapunovOptions lyap;
  lyap.check_stability = false;
  lyap.tolerance = options.tolerance;
  constexpr int kMaxNewtonSteps = 6;
  for (int step = 0; step < kMaxNewtonSteps; ++step) {
    const Vector k = g.transition * p * g.observation.transpose() + g.cross_cov;
    const double s = (g.observation * p * g.observation.transpose())(0, 0) + g.obs_noise;
    if (!(s > 0.0)) throw_numerical("DARE: invalid solution");
    const Vector gain = k / s;
    const Matrix closed = g.transition - gain * g.observation;
    Matrix q = g.state_noise - gain * g.cross_cov.transpose() -
               g.cross_cov * gain.transpose() + (g.obs_noise * gain) * gain.transpose();
    symmetrize(q);
    Matrix next = solve_dlyap(closed, q, lyap);
    const double delta = frobenius(next - p);
    p = std::move(next);
    ++report.iterations;
    if (delta <= options.tolerance * frobenius(p)) break;
  }
  return p;
}

Matrix dare_fixed_point(const GeneralSS& g, const DareOptions& options, SolverReport& report) {
  const Matrix& f = g.transition;
  const Matrix& h = g.observation;
  Matrix p = g.state_noise;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Vector k = f * p * h.transpose() + g.cross_cov;
    const double s = (h * p * h.transpose())(0, 0) + g.obs_noise;
    Matrix next = f * p * f.transpose() + g.state_noise - (k / s) * k.transpose();
    symmetrize(next);
    if (!all_finite(next)) throw_numerical("DARE: no convergence");
    const double delta = frobenius(next - p);
    p = std::move(next);
    report.iterations = it;
    if (delta <= options.tolerance * frobenius(p)) return p;
  }
  throw_numerical("DARE: no convergence");
}

ScaleEntry storage_at_scale_impl(const InnovationsSS& base, const FirFilter& filter, int tau,
                                 const StorageOptions& options,
                                 std::vector<std::string>* warnings) {
  const InnovationsSS filtered = apply_fir_to_ss(base, filter);
  const GeneralSS gss = downsample_ss(filtered, tau, false);

  SolverReport dare_report;
  const InnovationsSS scaled = to_innovations_form(gss, options.innovations, &dare_report);

  LyapunovOptions lyap;
  lyap.check_stability = false;  // spectral radius is that of the base model, to the power tau
  SolverReport lyap_report;
  const double sigma2_x = process_variance(scaled, lyap, &lyap_report);

  ScaleEntry entry;
  entry.tau = tau;
  entry.f_tau = 1.0 / (2.0 * tau);
  entry.sigma2_x = sigma2_x;
  entry.sigma2_e = scaled.sigma2_e;
  entry.storage = storage(sigma2_x, scaled.sigma2_e);
  entry.lyapunov_residual = lyap_report.residual;
  entry.dare_residual = dare_report.residual;
  entry.dare_iterations = dare_report.iterations;
  if (warnings) {
    for (const auto& w : dare_report.warnings) {
      warnings->push_back("tau=" + std::to_string(tau) + ": " + w);
    }
  }
  return entry;
}

}  // namespace

FirFilter FirFilter::from_taps(std::vector<double> taps, double cutoff) {
  auto first = std::find_if(taps.begin(), taps.end(), [](double v) { return v != 0.0; });
  if (first == taps.end()) throw_invalid("filter has no nonzero taps");
  auto last = std::find_if(taps.rbegin(), taps.rend(), [](double v) { return v != 0.0; }).base();
  FirFilter out;
  out.taps_.assign(first, last);
  for (double v : out.taps_) {
    if (!std::isfinite(v)) throw_invalid("filter taps must be finite");
  }
  if (!(cutoff > 0.0 && cutoff <= 0.5)) throw_invalid("filter cutoff must lie in (0, 0.5]");
  out.cutoff_ = cutoff;
  return out;
}

double FirFilter::dc_gain() const {
  double sum = 0.0;
  for (double v : taps_) sum += v;
  return sum;
}

FirFilter design_fir_lowpass(int r, double cutoff) {
  if (r < 0) throw_invalid("filter order must be non-negative");
  if (r % 2 != 0) throw_invalid("linear-phase design requires even order");
  if (!(cutoff > 0.0 && cutoff <= 0.5)) throw_invalid("filter cutoff must lie in (0, 0.5]");
  if (cutoff == 0.5 || r == 0) return FirFilter::from_taps({1.0}, cutoff);

  const int half = r / 2;
  std::vector<double> taps(static_cast<std::size_t>(r) + 1);
  double sum = 0.0;
  for (int k = 0; k <= r; ++k) {
    const double x = static_cast<double>(k - half);
    double h;
    if (k == half) {
      h = 2.0 * cutoff;
    } else {
      const double s = 2.0 * cutoff * x;
      // sin(pi s) at integer s is zero in exact arithmetic; keep it exact.
      if (std::abs(s - std::round(s)) < 1e-12 * std::max(1.0, std::abs(s))) {
        h = 0.0;
      } else {
        h = std::sin(std::numbers::pi * s) / (std::numbers::pi * x);
      }
    }
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / r);
    taps[static_cast<std::size_t>(k)] = h * window;
    sum += taps[static_cast<std::size_t>(k)];
  }
  for (double& v : taps) v /= sum;
  return FirFilter::from_taps(std::move(taps), cutoff);
}

InnovationsSS ar_to_ss(const ArPolynomial& poly, double sigma2_e) {
  if (!(sigma2_e > 0.0)) throw_invalid("innovation variance must be positive");
  if (!poly.stable()) throw_numerical("nonstationary process");
  const Index m = poly.order();
  InnovationsSS ss;
  ss.sigma2_e = sigma2_e;
  ss.observation.resize(m);
  for (Index j = 0; j < m; ++j) ss.observation(j) = poly.coefficients()[static_cast<std::size_t>(j)];
  ss.transition = Matrix::Zero(m, m);
  if (m > 0) {
    ss.transition.row(0) = ss.observation;
    ss.transition.diagonal(-1).setOnes();
  }
  ss.gain = Vector::Zero(m);
  if (m > 0) ss.gain(0) = 1.0;
  return ss;
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw_invalid("spectral radius of a non-square matrix");
  if (a.rows() == 0) return 0.0;
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) throw_numerical("eigenvalue computation failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix solve_dlyap(const Matrix& a, const Matrix& q, const LyapunovOptions& options,
                   SolverReport* report) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows()) {
    throw_invalid("Lyapunov: dimension mismatch");
  }
  if (options.check_stability && spectral_radius(a) >= 1.0 - kStabilityMargin) {
    throw_numerical("Lyapunov: unstable transition matrix");
  }
  SolverReport local;
  SolverReport& rep = report ? *report : local;
  rep = SolverReport{};
  if (a.rows() == 0) return q;

  Matrix p = q;
  Matrix ak = a;
  bool converged = false;
  for (int step = 1; step <= options.max_doublings; ++step) {
    const Matrix update = ak * p * ak.transpose();
    p += update;
    rep.iterations = step;
    if (!all_finite(p)) throw_numerical("Lyapunov: unstable transition matrix");
    if (frobenius(update) <= options.tolerance * frobenius(p)) {
      converged = true;
      break;
    }
    ak = ak * ak;
  }
  if (!converged) throw_numerical("Lyapunov: no convergence");
  symmetrize(p);

  const double scale = frobenius(q) > 0.0 ? frobenius(q) : frobenius(p);
  rep.residual = scale > 0.0 ? frobenius(p - a * p * a.transpose() - q) / scale : 0.0;
  return p;
}

double process_variance(const InnovationsSS& ss, const LyapunovOptions& options,
                        SolverReport* report) {
  if (!(ss.sigma2_e > 0.0)) throw_invalid("innovation variance must be positive");
  if (ss.dim() == 0) {
    if (report) *report = SolverReport{};
    return ss.sigma2_e;
  }
  const Matrix q = ss.sigma2_e * (ss.gain * ss.gain.transpose());
  const Matrix omega = solve_dlyap(ss.transition, q, options, report);
  return (ss.observation * omega * ss.observation.transpose())(0, 0) + ss.sigma2_e;
}

double storage(double sigma2_x, double sigma2_e) {
  if (!(sigma2_e > 0.0)) throw_numerical("degenerate innovation variance");
  if (!(sigma2_x > 0.0) || sigma2_x < sigma2_e * (1.0 - 1e-9)) {
    std::ostringstream msg;
    msg << "process variance " << sigma2_x << " below innovation variance " << sigma2_e;
    throw_numerical(msg.str());
  }
  return 0.5 * std::log(sigma2_x / sigma2_e);
}

StorageDecomposition storage_decomposition(double sigma2_x, double sigma2_e) {
  StorageDecomposition out;
  out.storage = storage(sigma2_x, sigma2_e);
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  out.entropy = 0.5 * std::log(two_pi_e * sigma2_x);
  out.conditional_entropy = 0.5 * std::log(two_pi_e * sigma2_e);
  return out;
}

InnovationsSS apply_fir_to_ss(const InnovationsSS& ss, const FirFilter& filter) {
  const auto taps = filter.taps();
  const double d0 = taps[0];
  if (d0 == 0.0) throw_numerical("filter leading tap zero after stripping");
  require_companion(ss);
  const Index m = ss.dim();
  const Index r = filter.order();
  if (r == 0 && d0 == 1.0) return ss;

  const Index n = m + r;
  InnovationsSS out;
  out.sigma2_e = d0 * d0 * ss.sigma2_e;
  out.observation.resize(n);
  out.observation.head(m) = ss.observation;
  for (Index j = 0; j < r; ++j) out.observation(m + j) = taps[static_cast<std::size_t>(j + 1)];

  // State: [X^(r)_{n-1} .. X^(r)_{n-m}, E_{n-1} .. E_{n-r}].
  out.transition = Matrix::Zero(n, n);
  if (m > 0) {
    out.transition.row(0) = out.observation;
    for (Index i = 1; i < m; ++i) out.transition(i, i - 1) = 1.0;
  }
  for (Index i = 1; i < r; ++i) out.transition(m + i, m + i - 1) = 1.0;

  out.gain = Vector::Zero(n);
  if (m > 0) out.gain(0) = 1.0;
  if (r > 0) out.gain(m) = 1.0 / d0;
  return out;
}

GeneralSS downsample_ss(const InnovationsSS& ss, int tau, bool check_stability) {
  if (tau < 1) throw_invalid("downsampling factor must be >= 1");
  if (check_stability && spectral_radius(ss.transition) >= 1.0 - kStabilityMargin) {
    throw_numerical("nonstationary process");
  }
  const Index n = ss.dim();
  const Matrix& b = ss.transition;
  const Matrix q1 = ss.sigma2_e * (ss.gain * ss.gain.transpose());

  // (B^j, Sigma_W(j)) pairs compose as
  //   Sigma_W(a + b) = B^b Sigma_W(a) (B^b)^T + Sigma_W(b),
  // so both B^(tau-1) and Sigma_W(tau-1) follow from binary exponentiation.
  Matrix pow_acc = Matrix::Identity(n, n);
  Matrix w_acc = Matrix::Zero(n, n);
  Matrix pow_base = b;
  Matrix w_base = q1;
  for (unsigned e = static_cast<unsigned>(tau - 1); e != 0; e >>= 1) {
    if (e & 1u) {
      w_acc = pow_base * w_acc * pow_base.transpose() + w_base;
      pow_acc = pow_base * pow_acc;
    }
    if (e > 1) {
      w_base = pow_base * w_base * pow_base.transpose() + w_base;
      pow_base = pow_base * pow_base;
    }
  }

  GeneralSS out;
  out.transition = b * pow_acc;
  out.observation = ss.observation;
  out.obs_noise = ss.sigma2_e;
  out.cross_cov = pow_acc * ss.gain * ss.sigma2_e;
  out.state_noise = b * w_acc * b.transpose() + q1;
  symmetrize(out.state_noise);
  return out;
}

Matrix solve_dare(const GeneralSS& gss, const DareOptions& options, SolverReport* report) {
  const Index n = gss.dim();
  if (gss.transition.cols() != n || gss.observation.size() != n ||
      gss.state_noise.rows() != n || gss.state_noise.cols() != n || gss.cross_cov.size() != n) {
    throw_invalid("DARE: dimension mismatch");
  }
  if (!(gss.obs_noise > 0.0)) throw_invalid("DARE: observation noise variance must be positive");
  if (n > 0 && (gss.state_noise - gss.state_noise.transpose()).norm() >
                   1e-10 * std::max(1.0, gss.state_noise.norm())) {
    throw_invalid("DARE: state noise covariance is not symmetric");
  }
  SolverReport local;
  SolverReport& rep = report ? *report : local;
  rep = SolverReport{};
  if (n == 0) return Matrix(0, 0);

  Matrix p;
  double equivalent_steps = 0.0;
  if (options.method == DareMethod::Doubling) {
    p = dare_doubling(gss, options, rep);
    equivalent_steps = std::ldexp(1.0, rep.iterations);
    if (rep.iterations > 1) p = dare_newton_polish(gss, std::move(p), options, rep);
  } else {
    p = dare_fixed_point(gss, options, rep);
    equivalent_steps = static_cast<double>(rep.iterations);
  }
  if (equivalent_steps > options.warn_iterations) {
    std::ostringstream msg;
    msg << "DARE: slow convergence (" << equivalent_steps << " Riccati steps)";
    rep.warnings.push_back(msg.str());
  }
  rep.residual = riccati_residual(gss, p);
  return p;
}

InnovationsSS to_innovations_form(const GeneralSS& gss, const InnovationsOptions& options,
                                  SolverReport* report) {
  const Matrix p = solve_dare(gss, options.dare, report);
  InnovationsSS out;
  out.transition = gss.transition;
  out.observation = gss.observation;
  if (gss.dim() == 0) {
    out.gain = Vector(0);
    out.sigma2_e = gss.obs_noise;
    return out;
  }
  const double sigma2 = (gss.observation * p * gss.observation.transpose())(0, 0) + gss.obs_noise;
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw_numerical("DARE: invalid solution");
  const Vector numerator = gss.transition * p * gss.observation.transpose() + gss.cross_cov;
  const double divisor = options.gain == GainConvention::Innovations ? sigma2 : gss.obs_noise;
  out.gain = numerator / divisor;
  out.sigma2_e = sigma2;
  return out;
}

double MultiscaleProfile::max_residual() const {
  double worst = 0.0;
  for (const auto& e : entries) {
    worst = std::max({worst, e.lyapunov_residual, e.dare_residual});
  }
  return worst;
}

ScaleEntry storage_at_scale(const InnovationsSS& base, const FirFilter& filter, int tau,
                            const StorageOptions& options) {
  if (tau < 1) throw_invalid("scale factor must be >= 1");
  if (spectral_radius(base.transition) >= 1.0 - kStabilityMargin) {
    throw_numerical("nonstationary process");
  }
  return storage_at_scale_impl(base, filter, tau, options, nullptr);
}

MultiscaleProfile multiscale_storage(const ArfiModel& model, int q, int r,
                                     std::span<const int> taus, const StorageOptions& options) {
  if (taus.empty()) throw_invalid("at least one scale is required");
  for (int tau : taus) {
    if (tau < 1) throw_invalid("scale factors must be >= 1");
  }
  if (r < 0 || r % 2 != 0) throw_invalid("linear-phase design requires even order");

  ArPolynomial poly = arfi_to_ar(model, q);
  if (options.trim_zero_lags) poly = poly.trimmed();
  const InnovationsSS base = ar_to_ss(poly, model.sigma2_e());

  MultiscaleProfile profile;
  if (model.d_outside_recommended_range()) {
    profile.warnings.push_back("d outside the recommended range (-0.5, 0.75)");
  }
  profile.entries.reserve(taus.size());
  for (int tau : taus) {
    try {
      const FirFilter filter =
          tau == 1 ? FirFilter::identity() : design_fir_lowpass(r, 1.0 / (2.0 * tau));
      profile.entries.push_back(
          storage_at_scale_impl(base, filter, tau, options, &profile.warnings));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (tau=" + std::to_string(tau) + ")");
    }
  }
  return profile;
}

std::vector<int> tau_range(int tau_max) {
  if (tau_max < 1) throw_invalid("tau_max must be >= 1");
  std::vector<int> out(static_cast<std::size_t>(tau_max));
  for (int i = 0; i < tau_max; ++i) out[static_cast<std::size_t>(i)] = i + 1;
  return out;
}

}  // namespace mistore
