#include "mistore/simulate.hpp"

#include <cmath>
#include <numbers>

#include "mistore/error.hpp"

namespace mistore {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed ^ splitmix64(stream))) {}

double GaussianStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t SimSpec::effective_burnin() const {
  return burnin.value_or(1000 + static_cast<std::size_t>(q));
}

void SimSpec::validate() const {
  if (q < 0) throw_invalid("truncation lag q must be >= 0");
  if (n < 1) throw_invalid("series length must be >= 1");
  if (reps < 1) throw_invalid("replicate count must be >= 1");
  if (effective_burnin() < static_cast<std::size_t>(q)) {
    throw_invalid("burn-in must be at least the truncation lag");
  }
}

namespace {

ArPolynomial checked_polynomial(const SimSpec& spec) {
  spec.validate();
  ArPolynomial poly = arfi_to_ar(spec.model, spec.q).trimmed();
  if (!poly.stable()) throw_numerical("truncated AR polynomial is nonstationary");
  return poly;
}

std::vector<double> run_recursion(const SimSpec& spec, const ArPolynomial& poly, int replicate) {
  const auto b = poly.coefficients();
  const std::size_t m = b.size();
  const std::size_t burnin = spec.effective_burnin();
  const double sigma = std::sqrt(spec.model.sigma2_e());

  GaussianStream noise(spec.seed, static_cast<std::uint64_t>(replicate));
  std::vector<double> x(burnin + spec.n, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = sigma * noise.next();
    const std::size_t kmax = std::min(m, t);
    for (std::size_t k = 1; k <= kmax; ++k) acc += b[k - 1] * x[t - k];
    x[t] = acc;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burnin), x.end()};
}

}  // namespace

std::vector<double> generate_replicate(const SimSpec& spec, int replicate) {
  return run_recursion(spec, checked_polynomial(spec), replicate);
}

std::vector<std::vector<double>> generate_arfi(const SimSpec& spec) {
  const ArPolynomial poly = checked_polynomial(spec);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(spec.reps));
  for (int i = 0; i < spec.reps; ++i) out[static_cast<std::size_t>(i)] = run_recursion(spec, poly, i);
  return out;
}

}  // namespace mistore
