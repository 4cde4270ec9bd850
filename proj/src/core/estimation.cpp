#include "mistore/estimation.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mistore/error.hpp"

namespace mistore {

namespace {

constexpr double kWhittleLower = -0.5;
constexpr double kWhittleUpper = 1.0;
constexpr double kWhittleTolerance = 1e-6;
constexpr std::size_t kMinWhittleLength = 64;

std::vector<double> demeaned(std::span<const double> x) {
  const double mean = x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v -= mean;
  return out;
}

// Fourier frequencies lambda_j = 2 pi j / N and the periodogram there.
struct LowFrequencyPeriodogram {
  std::vector<double> log_lambda;
  std::vector<double> lambda;
  std::vector<double> intensity;
  double mean_log_lambda = 0.0;
};

LowFrequencyPeriodogram periodogram(std::span<const double> x, int bandwidth) {
  const std::size_t n = x.size();
  LowFrequencyPeriodogram out;
  out.lambda.resize(static_cast<std::size_t>(bandwidth));
  out.log_lambda.resize(out.lambda.size());
  out.intensity.resize(out.lambda.size());
  for (int j = 1; j <= bandwidth; ++j) {
    const double lambda = 2.0 * std::numbers::pi * j / static_cast<double>(n);
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // (j t mod N) keeps the trig argument small for long series.
      const double angle = 2.0 * std::numbers::pi *
                           static_cast<double>((static_cast<std::size_t>(j) * t) % n) /
                           static_cast<double>(n);
      re += x[t] * std::cos(angle);
      im -= x[t] * std::sin(angle);
    }
    const auto idx = static_cast<std::size_t>(j - 1);
    out.lambda[idx] = lambda;
    out.log_lambda[idx] = std::log(lambda);
    out.intensity[idx] = (re * re + im * im) / (2.0 * std::numbers::pi * static_cast<double>(n));
  }
  out.mean_log_lambda =
      std::accumulate(out.log_lambda.begin(), out.log_lambda.end(), 0.0) / bandwidth;
  return out;
}

double objective(const LowFrequencyPeriodogram& pg, double d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < pg.lambda.size(); ++j) {
    acc += std::exp(2.0 * d * pg.log_lambda[j]) * pg.intensity[j];
  }
  acc /= static_cast<double>(pg.lambda.size());
  return std::log(acc) - 2.0 * d * pg.mean_log_lambda;
}

int bandwidth_for(std::size_t n, double exponent) {
  if (!(exponent > 0.0 && exponent < 1.0)) {
    throw_invalid("Whittle bandwidth exponent must lie in (0, 1)");
  }
  const int m = static_cast<int>(std::floor(std::pow(static_cast<double>(n), exponent)));
  return std::clamp(m, 1, static_cast<int>(n / 2));
}

// Regression rows n = first..N-1 on lags 1..p.
Eigen::MatrixXd lag_matrix(const std::vector<double>& x, std::size_t first, int p) {
  const auto rows = static_cast<Eigen::Index>(x.size() - first);
  Eigen::MatrixXd design(rows, p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (int k = 0; k < p; ++k) {
      design(i, k) = x[first + static_cast<std::size_t>(i) - 1 - static_cast<std::size_t>(k)];
    }
  }
  return design;
}

Eigen::VectorXd response(const std::vector<double>& x, std::size_t first) {
  return Eigen::Map<const Eigen::VectorXd>(x.data() + first,
                                           static_cast<Eigen::Index>(x.size() - first));
}

struct LeastSquares {
  Eigen::VectorXd beta;
  double rss = 0.0;
};

LeastSquares least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) throw_data("degenerate series");
  LeastSquares out;
  out.beta = qr.solve(y);
  out.rss = (y - design * out.beta).squaredNorm();
  return out;
}

}  // namespace

double whittle_objective(std::span<const double> series, int bandwidth, double d) {
  const auto x = demeaned(series);
  return objective(periodogram(x, bandwidth), d);
}

WhittleEstimate whittle_d(std::span<const double> series, double bandwidth_exponent) {
  if (series.size() < kMinWhittleLength) throw_data("series too short for Whittle estimation");
  const auto x = demeaned(series);
  WhittleEstimate out;
  out.bandwidth = bandwidth_for(x.size(), bandwidth_exponent);
  const auto pg = periodogram(x, out.bandwidth);
  const double total = std::accumulate(pg.intensity.begin(), pg.intensity.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw_data("periodogram degenerate (zero-variance series)");
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kWhittleLower;
  double b = kWhittleUpper;
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = objective(pg, c);
  double fe = objective(pg, e);
  while (b - a > kWhittleTolerance) {
    if (fc <= fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = objective(pg, c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = objective(pg, e);
    }
  }
  out.d = 0.5 * (a + b);
  out.stderr_d = 1.0 / (2.0 * std::sqrt(static_cast<double>(out.bandwidth)));
  if (out.d - kWhittleLower < 10 * kWhittleTolerance ||
      kWhittleUpper - out.d < 10 * kWhittleTolerance) {
    std::ostringstream msg;
    msg << "Whittle estimate d=" << out.d << " at the search boundary";
    out.warnings.push_back(msg.str());
  }
  return out;
}

ArFit ols_ar(std::span<const double> series, int p, bool remove_mean) {
  if (p < 1) throw_invalid("AR order must be >= 1");
  if (series.size() <= 2 * static_cast<std::size_t>(p) + 1) {
    throw_data("series too short for AR order " + std::to_string(p));
  }
  const auto x = remove_mean ? demeaned(series) : std::vector<double>(series.begin(), series.end());
  const auto first = static_cast<std::size_t>(p);
  const auto ls = least_squares(lag_matrix(x, first, p), response(x, first));
  ArFit out;
  out.coefficients.assign(ls.beta.data(), ls.beta.data() + ls.beta.size());
  out.rows = static_cast<int>(x.size() - first);
  out.sigma2 = ls.rss / out.rows;
  if (!(out.sigma2 > 0.0)) throw_data("degenerate series (zero residual variance)");
  out.stable = companion_spectral_radius(out.coefficients) < 1.0 - kStabilityMargin;
  return out;
}

OrderSelection select_order_bic(std::span<const double> series, int pmin, int pmax,
                                bool remove_mean) {
  if (pmin < 1 || pmax < pmin) throw_invalid("AR order range must satisfy 1 <= pmin <= pmax");
  if (series.size() <= 2 * static_cast<std::size_t>(pmax) + 1) {
    throw_data("series too short for AR order " + std::to_string(pmax));
  }
  const auto x = remove_mean ? demeaned(series) : std::vector<double>(series.begin(), series.end());
  const auto first = static_cast<std::size_t>(pmax);
  const Eigen::MatrixXd design = lag_matrix(x, first, pmax);
  const Eigen::VectorXd y = response(x, first);
  const double rows = static_cast<double>(y.size());

  OrderSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int p = pmin; p <= pmax; ++p) {
    const auto ls = least_squares(design.leftCols(p), y);
    const double sigma2 = ls.rss / rows;
    if (!(sigma2 > 0.0)) throw_data("degenerate series (zero residual variance)");
    const double bic = rows * std::log(sigma2) + p * std::log(rows);
    out.bic.push_back(bic);
    if (bic < best) {
      best = bic;
      out.p = p;
    }
  }
  return out;
}

std::string_view to_string(FitMode mode) {
  switch (mode) {
    case FitMode::EAR: return "ear";
    case FitMode::EARD: return "eard";
    case FitMode::EARFI: return "earfi";
  }
  return "?";
}

std::optional<FitMode> parse_fit_mode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ear") return FitMode::EAR;
  if (lower == "eard") return FitMode::EARD;
  if (lower == "earfi") return FitMode::EARFI;
  return std::nullopt;
}

void FitConfig::validate() const {
  if (q < 1) throw_invalid("truncation lag q must be >= 1");
  if (pmin < 2 || pmax < pmin) throw_invalid("AR order range must satisfy 2 <= pmin <= pmax");
  if (!(bandwidth_exponent > 0.0 && bandwidth_exponent < 1.0)) {
    throw_invalid("Whittle bandwidth exponent must lie in (0, 1)");
  }
}

FitResult fit(std::span<const double> series, const FitConfig& config) {
  config.validate();
  if (series.size() < kMinWhittleLength) throw_data("series too short for Whittle estimation");
  for (double v : series) {
    if (!std::isfinite(v)) throw_data("series contains non-finite values");
  }
  std::vector<double> x = config.remove_mean ? demeaned(series)
                                             : std::vector<double>(series.begin(), series.end());

  std::vector<std::string> warnings;
  double d_hat = 0.0;
  double d_stderr = 0.0;
  std::vector<double> target = x;
  if (config.mode != FitMode::EAR) {
    auto w = whittle_d(x, config.bandwidth_exponent);
    d_hat = w.d;
    d_stderr = w.stderr_d;
    warnings.insert(warnings.end(), w.warnings.begin(), w.warnings.end());
    target = apply_fracdiff_filter(x, d_hat, config.q).values;
  }

  const auto order = select_order_bic(target, config.pmin, config.pmax, config.remove_mean);
  const auto ar = ols_ar(target, order.p, config.remove_mean);
  if (!ar.stable) {
    throw_numerical("unstable AR fit (order " + std::to_string(order.p) + ")");
  }
  const double model_d = config.mode == FitMode::EARFI ? d_hat : 0.0;
  FitResult out{ArfiModel(ar.coefficients, model_d, ar.sigma2), d_hat, d_stderr, order.p,
                order.bic, ar.rows, std::move(warnings)};
  if (out.model.d_outside_recommended_range()) {
    out.warnings.push_back("d outside the recommended range (-0.5, 0.75)");
  }
  return out;
}

Significance d_significance(double d_hat, double stderr_d, double level) {
  if (!(stderr_d > 0.0)) throw_invalid("standard error must be positive");
  if (!(level > 0.0 && level < 1.0)) throw_invalid("significance level must lie in (0, 1)");
  const boost::math::normal standard;
  const double half = boost::math::quantile(standard, 1.0 - level / 2.0) * stderr_d;
  return {-half, half, std::abs(d_hat) > half};
}

}  // namespace mistore
