#include "mistore/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mistore/error.hpp"
#include "mistore/estimation.hpp"

namespace mistore {

namespace {

std::vector<double> poly_mul(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

double section_dc_gain(const Biquad& s) {
  return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
}

// Direct form II transposed, starting from the steady state of a constant
// input equal to `initial`.
void run_section(const Biquad& s, std::vector<double>& x, double initial) {
  const double g = section_dc_gain(s);
  double z1 = (g - s.b0) * initial;
  double z2 = (s.b2 - s.a2 * g) * initial;
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

void run_cascade(const IirFilter& f, std::vector<double>& x) {
  if (x.empty()) return;
  double initial = x.front();
  for (const auto& s : f.sections) {
    run_section(s, x, initial);
    initial *= section_dc_gain(s);
  }
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace

std::complex<double> IirFilter::response(double frequency) const {
  const std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi * frequency);
  std::complex<double> h = 1.0;
  for (const auto& s : sections) {
    h *= (s.b0 + w * (s.b1 + w * s.b2)) / (1.0 + w * (s.a1 + w * s.a2));
  }
  return h;
}

IirFilter butterworth_lowpass(double cutoff, int order) {
  if (!(cutoff > 0.0 && cutoff < 0.5)) {
    throw_invalid("Butterworth cutoff must lie strictly inside (0, 0.5)");
  }
  if (order < 1) throw_invalid("Butterworth order must be >= 1");
  const double warped = std::tan(std::numbers::pi * cutoff);

  IirFilter out;
  for (int k = 0; k < order / 2; ++k) {
    const std::complex<double> s =
        warped * std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    const std::complex<double> z = (1.0 + s) / (1.0 - s);
    Biquad sec;
    sec.a1 = -2.0 * z.real();
    sec.a2 = std::norm(z);
    const double g = (1.0 + sec.a1 + sec.a2) / 4.0;
    sec.b0 = g;
    sec.b1 = 2.0 * g;
    sec.b2 = g;
    out.sections.push_back(sec);
  }
  if (order % 2 == 1) {
    const double z = (1.0 - warped) / (1.0 + warped);  // real pole at s = -warped
    Biquad sec;
    sec.a1 = -z;
    const double g = (1.0 + sec.a1) / 2.0;
    sec.b0 = g;
    sec.b1 = g;
    out.sections.push_back(sec);
  }

  out.feedforward = {1.0};
  out.feedback = {1.0};
  for (const auto& s : out.sections) {
    out.feedforward = poly_mul(out.feedforward, {s.b0, s.b1, s.b2});
    out.feedback = poly_mul(out.feedback, {1.0, s.a1, s.a2});
  }
  const auto trim = [&](std::vector<double>& v) {
    while (v.size() > static_cast<std::size_t>(order) + 1 && v.back() == 0.0) v.pop_back();
  };
  trim(out.feedforward);
  trim(out.feedback);
  return out;
}

std::vector<double> filtfilt(const IirFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};
  std::size_t pad = 3 * (2 * filter.sections.size() + 1);
  pad = std::min(pad, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(filter, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(filter, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

std::vector<double> decimate(std::span<const double> series, int tau) {
  if (tau < 1) throw_invalid("decimation factor must be >= 1");
  if (series.size() < static_cast<std::size_t>(tau)) {
    throw_data("series shorter than the decimation factor");
  }
  if (tau == 1) return {series.begin(), series.end()};
  const auto filtered = filtfilt(butterworth_lowpass(1.0 / (2.0 * tau)), series);
  const std::size_t count = series.size() / static_cast<std::size_t>(tau);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = filtered[i * static_cast<std::size_t>(tau)];
  return out;
}

void SampEnConfig::validate() const {
  if (m < 1) throw_invalid("embedding dimension must be >= 1");
  if (!(r_factor > 0.0)) throw_invalid("tolerance factor must be positive");
}

SampEnCounts sample_entropy_counts(std::span<const double> x, int m, double tolerance) {
  SampEnCounts counts;
  counts.tolerance = tolerance;
  const auto mm = static_cast<std::size_t>(m);
  if (m < 1 || x.size() < mm + 2) return counts;
  const std::size_t templates = x.size() - mm;

  // Pairs whose first coordinates differ by more than r cannot match, so
  // scanning in order of the first coordinate bounds the inner loop.
  std::vector<std::size_t> order(templates);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  for (std::size_t a = 0; a < templates; ++a) {
    const std::size_t i = order[a];
    for (std::size_t b = a + 1; b < templates; ++b) {
      const std::size_t j = order[b];
      if (!(std::abs(x[j] - x[i]) <= tolerance)) break;
      bool match = true;
      for (std::size_t k = 1; k < mm; ++k) {
        if (!(std::abs(x[i + k] - x[j + k]) <= tolerance)) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      ++counts.matches_m;
      if (std::abs(x[i + mm] - x[j + mm]) <= tolerance) ++counts.matches_m1;
    }
  }
  return counts;
}

std::optional<double> sampen_tolerance(std::span<const double> series,
                                       const SampEnConfig& config) {
  config.validate();
  double scale = 0.0;
  if (config.basis == ToleranceBasis::SeriesSd) {
    scale = sample_sd(series);
  } else {
    const int pmax = std::min<int>(16, static_cast<int>((series.size() - 2) / 2));
    if (series.size() < 4 || pmax < 1) return std::nullopt;
    try {
      const auto order = select_order_bic(series, 1, pmax);
      scale = std::sqrt(ols_ar(series, order.p).sigma2);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  return config.r_factor * scale;
}

std::optional<double> sample_entropy(std::span<const double> series, const SampEnConfig& config) {
  config.validate();
  if (series.size() < static_cast<std::size_t>(config.m) + 2) return std::nullopt;
  const auto tolerance = sampen_tolerance(series, config);
  if (!tolerance) return std::nullopt;
  const auto counts = sample_entropy_counts(series, config.m, *tolerance);
  if (counts.matches_m == 0 || counts.matches_m1 == 0) return std::nullopt;
  return -std::log(static_cast<double>(counts.matches_m1) /
                   static_cast<double>(counts.matches_m));
}

std::vector<RefinedMseEntry> refined_mse_storage(std::span<const double> series,
                                                 std::span<const int> taus,
                                                 const SampEnConfig& config) {
  config.validate();
  const double gaussian_entropy = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  std::vector<RefinedMseEntry> out;
  out.reserve(taus.size());
  for (int tau : taus) {
    if (tau < 1) throw_invalid("scale factors must be >= 1");
    RefinedMseEntry entry;
    entry.tau = tau;
    entry.f_tau = 1.0 / (2.0 * tau);
    if (series.size() >= static_cast<std::size_t>(tau)) {
      const auto rescaled = decimate(series, tau);
      entry.sample_entropy = sample_entropy(rescaled, config);
      if (entry.sample_entropy) entry.storage = gaussian_entropy - *entry.sample_entropy;
    }
    out.push_back(entry);
  }
  return out;
}

}  // namespace mistore
