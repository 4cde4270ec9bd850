#ifndef MISTORE_TESTS_ORACLES_HPP
#define MISTORE_TESTS_ORACLES_HPP

// Independent reference implementations used by the tests. None of these
// call into the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// Gamma-function form of the (1 - L)^d coefficient at lag k, in log space.
inline double fracdiff_gamma(double d, int k) {
  if (k == 0) return 1.0;
  if (d == std::floor(d) && d >= 0 && k > d) return 0.0;
  auto sign_gamma = [](double x) {
    if (x > 0) return 1.0;
    return (static_cast<long long>(std::ceil(-x)) % 2 == 0) ? 1.0 : -1.0;
  };
  const double lg = std::lgamma(k - d) - std::lgamma(-d) - std::lgamma(k + 1.0);
  return sign_gamma(k - d) * sign_gamma(-d) * std::exp(lg);
}

// Coefficients of B(L) in the 1 - sum b_k L^k convention from the piecewise
// product of A(L) (order p) and the truncated G(L) (order q), q >= p.
inline std::vector<double> piecewise_product(const std::vector<double>& a,
                                             const std::vector<double>& g) {
  const int p = static_cast<int>(a.size());
  const int q = static_cast<int>(g.size()) - 1;
  std::vector<double> b(static_cast<std::size_t>(p + q), 0.0);
  for (int k = 1; k <= p + q; ++k) {
    double v = 0.0;
    if (k <= p) {
      v = -g[k];
      for (int i = 1; i <= k - 1; ++i) v -= -a[i - 1] * g[k - i];
      v += a[k - 1];
    } else if (k <= q) {
      v = -g[k];
      for (int i = 1; i <= p; ++i) v += a[i - 1] * g[k - i];
    } else {
      for (int i = k - q; i <= p; ++i) v += a[i - 1] * g[k - i];
    }
    b[static_cast<std::size_t>(k - 1)] = v;
  }
  return b;
}

// Hamming-windowed sinc, unit DC gain, no tap stripping.
inline std::vector<double> hamming_sinc(int r, double cutoff) {
  std::vector<double> h(static_cast<std::size_t>(r + 1));
  double sum = 0.0;
  for (int k = 0; k <= r; ++k) {
    const double t = k - r / 2.0;
    const double x = 2.0 * cutoff * t;
    const double sinc = t == 0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    const double w = r == 0 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * kPi * k / r);
    h[static_cast<std::size_t>(k)] = 2.0 * cutoff * sinc * w;
    sum += h[static_cast<std::size_t>(k)];
  }
  for (auto& v : h) v /= sum;
  return h;
}

// Causal FIR; output sample n uses x[n - r..n] and only fully covered
// samples are returned.
inline std::vector<double> fir_valid(const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t r = h.size() - 1;
  if (x.size() <= r) return {};
  std::vector<double> y(x.size() - r);
  for (std::size_t n = r; n < x.size(); ++n) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= r; ++k) acc += h[k] * x[n - k];
    y[n - r] = acc;
  }
  return y;
}

inline std::vector<double> every(const std::vector<double>& x, int tau) {
  std::vector<double> y;
  for (std::size_t i = 0; i < x.size(); i += static_cast<std::size_t>(tau)) y.push_back(x[i]);
  return y;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

inline std::vector<double> autocovariance(const std::vector<double>& x, int maxlag) {
  const double m = mean(x);
  const std::size_t n = x.size();
  std::vector<double> c(static_cast<std::size_t>(maxlag + 1), 0.0);
  for (int k = 0; k <= maxlag; ++k) {
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) s += (x[i] - m) * (x[i - k] - m);
    c[static_cast<std::size_t>(k)] = s / static_cast<double>(n);
  }
  return c;
}

// Levinson-Durbin: one-step prediction error variance of the order-p
// Yule-Walker predictor.
inline double levinson_error(const std::vector<double>& acov, int order) {
  std::vector<double> phi(static_cast<std::size_t>(order + 1), 0.0), prev;
  double err = acov[0];
  for (int k = 1; k <= order; ++k) {
    double acc = acov[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j) acc -= phi[static_cast<std::size_t>(j)] * acov[static_cast<std::size_t>(k - j)];
    const double kappa = acc / err;
    prev = phi;
    phi[static_cast<std::size_t>(k)] = kappa;
    for (int j = 1; j < k; ++j) {
      phi[static_cast<std::size_t>(j)] = prev[static_cast<std::size_t>(j)] - kappa * prev[static_cast<std::size_t>(k - j)];
    }
    err *= (1.0 - kappa * kappa);
  }
  return err;
}

// 0.5 ln(var / prediction error) from a high-order Yule-Walker fit.
inline double empirical_storage(const std::vector<double>& x, int order) {
  const auto c = autocovariance(x, order);
  return 0.5 * std::log(c[0] / levinson_error(c, order));
}

// Storage of the process with lag polynomial b (1 - sum b_k L^k), filtered
// by h and sampled every tau steps, from the Kolmogorov-Szego formula on a
// uniform grid of the folded spectrum.
inline double spectral_storage(const std::vector<double>& b, const std::vector<double>& h, int tau,
                               int grid = 1 << 14) {
  double var = 0.0, logsum = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double w = 2.0 * kPi * (i + 0.5) / grid;  // frequency of the downsampled process
    double folded = 0.0;
    for (int k = 0; k < tau; ++k) {
      const double u = (w + 2.0 * kPi * k) / tau;
      const std::complex<double> z = std::polar(1.0, -u);
      std::complex<double> den = 1.0, zk = 1.0;
      for (double bk : b) {
        zk *= z;
        den -= bk * zk;
      }
      std::complex<double> num = 0.0;
      zk = 1.0;
      for (double hk : h) {
        num += hk * zk;
        zk *= z;
      }
      folded += std::norm(num) / std::norm(den);
    }
    folded /= tau;
    var += folded;
    logsum += std::log(folded);
  }
  var /= grid;
  const double innov = std::exp(logsum / grid);
  return 0.5 * std::log(var / innov);
}

// O(N^2) Sample Entropy pair counts with self-matches excluded.
struct PairCounts {
  long long b = 0, a = 0;
};

inline PairCounts sampen_brute(const std::vector<double>& x, int m, double r) {
  PairCounts c;
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(m) + 1) return c;
  const std::size_t templates = n - static_cast<std::size_t>(m);
  for (std::size_t i = 0; i < templates; ++i) {
    for (std::size_t j = i + 1; j < templates; ++j) {
      double dist = 0.0;
      for (int k = 0; k < m; ++k) dist = std::max(dist, std::abs(x[i + k] - x[j + k]));
      if (dist <= r) {
        ++c.b;
        if (std::abs(x[i + m] - x[j + m]) <= r) ++c.a;
      }
    }
  }
  return c;
}

inline double sample_sd(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

// Plain AR recursion driven by std::normal_distribution; independent of the
// library generator.
inline std::vector<double> simulate_ar(const std::vector<double>& b, std::size_t n,
                                       std::uint64_t seed, std::size_t burnin = 2000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n + burnin, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = normal(rng);
    for (std::size_t k = 1; k <= b.size() && k <= t; ++k) acc += b[k - 1] * x[t - k];
    x[t] = acc;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burnin), x.end()};
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);
  return x;
}

}  // namespace oracle

#endif  // MISTORE_TESTS_ORACLES_HPP
