#include "mistore/fracdiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mistore/error.hpp"

namespace mistore {

FracDiffExpansion fracdiff_coefficients(double d, int q) {
  if (q < 1) throw_invalid("truncation lag q must be >= 1");
  if (!std::isfinite(d)) throw_invalid("fractional differencing parameter must be finite");
  FracDiffExpansion out;
  out.d = d;
  out.g.resize(static_cast<std::size_t>(q) + 1);
  out.g[0] = 1.0;
  for (int k = 1; k <= q; ++k) {
    out.g[k] = out.g[k - 1] * (static_cast<double>(k) - 1.0 - d) / static_cast<double>(k);
  }
  return out;
}

double companion_spectral_radius(std::span<const double> b) {
  const auto m = static_cast<Eigen::Index>(b.size());
  if (m == 0) return 0.0;
  if (m == 1) return std::abs(b[0]);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) companion(0, j) = b[static_cast<std::size_t>(j)];
  companion.diagonal(-1).setOnes();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw_numerical("eigenvalue computation failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

ArPolynomial::ArPolynomial() = default;

ArPolynomial::ArPolynomial(std::vector<double> b) : b_(std::move(b)) {
  for (double v : b_) {
    if (!std::isfinite(v)) throw_invalid("AR coefficients must be finite");
  }
  spectral_radius_ = companion_spectral_radius(b_);
}

std::vector<double> ArPolynomial::lag_coefficients() const {
  std::vector<double> out(b_.size() + 1);
  out[0] = 1.0;
  for (std::size_t k = 0; k < b_.size(); ++k) out[k + 1] = -b_[k];
  return out;
}

ArPolynomial ArPolynomial::trimmed() const {
  std::size_t m = b_.size();
  while (m > 0 && b_[m - 1] == 0.0) --m;
  if (m == b_.size()) return *this;
  ArPolynomial out;
  out.b_.assign(b_.begin(), b_.begin() + static_cast<std::ptrdiff_t>(m));
  out.spectral_radius_ = companion_spectral_radius(out.b_);
  return out;
}

ArfiModel::ArfiModel(std::vector<double> a, double d, double sigma2_e)
    : a_(std::move(a)), d_(d), sigma2_e_(sigma2_e) {
  if (!(sigma2_e_ > 0.0) || !std::isfinite(sigma2_e_)) {
    throw_invalid("innovation variance must be positive and finite");
  }
  if (!(d_ > -0.5 && d_ < 1.0)) {
    std::ostringstream msg;
    msg << "fractional differencing parameter d=" << d_ << " outside (-0.5, 1)";
    throw_invalid(msg.str());
  }
  for (double v : a_) {
    if (!std::isfinite(v)) throw_invalid("AR coefficients must be finite");
  }
  if (companion_spectral_radius(a_) >= 1.0 - kStabilityMargin) {
    throw_numerical("AR polynomial has roots on or inside the unit circle");
  }
}

std::vector<double> convolve(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) return {};
  std::vector<double> out(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

ArPolynomial arfi_to_ar(const ArfiModel& model, int q) {
  if (q < 0) throw_invalid("truncation lag q must be >= 0");
  std::vector<double> g{1.0};
  if (q > 0) g = fracdiff_coefficients(model.d(), q).g;

  std::vector<double> a_lag(static_cast<std::size_t>(model.p()) + 1);
  a_lag[0] = 1.0;
  for (int i = 0; i < model.p(); ++i) a_lag[i + 1] = -model.ar()[i];

  const auto product = convolve(a_lag, g);
  std::vector<double> b(product.size() - 1);
  for (std::size_t k = 1; k < product.size(); ++k) b[k - 1] = -product[k];
  return ArPolynomial(std::move(b));
}

FracDiffFiltered apply_fracdiff_filter(std::span<const double> series, double d, int q) {
  const auto expansion = fracdiff_coefficients(d, q);
  if (series.size() < static_cast<std::size_t>(q) + 1) {
    throw_data("series too short for truncation lag");
  }
  FracDiffFiltered out;
  out.values.resize(series.size());
  out.transient = static_cast<std::size_t>(q);
  const auto& g = expansion.g;
  for (std::size_t n = 0; n < series.size(); ++n) {
    const std::size_t kmax = std::min<std::size_t>(n, static_cast<std::size_t>(q));
    double acc = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) acc += g[k] * series[n - k];
    out.values[n] = acc;
  }
  return out;
}

ArPolynomial poles_to_ar(std::span<const Pole> poles) {
  std::vector<double> lag{1.0};
  for (const auto& pole : poles) {
    if (!(pole.modulus >= 0.0)) throw_invalid("pole modulus must be non-negative");
    if (pole.modulus >= 1.0) throw_invalid("unstable pole");
    if (!(pole.frequency > 0.0 && pole.frequency < 0.5)) {
      throw_invalid("pole frequency must lie in (0, 0.5)");
    }
    const double rho = pole.modulus;
    const std::vector<double> quad{
        1.0, -2.0 * rho * std::cos(2.0 * std::numbers::pi * pole.frequency), rho * rho};
    lag = convolve(lag, quad);
  }
  std::vector<double> b(lag.size() - 1);
  for (std::size_t k = 1; k < lag.size(); ++k) b[k - 1] = -lag[k];
  return ArPolynomial(std::move(b));
}

}  // namespace mistore
