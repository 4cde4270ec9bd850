#ifndef MISTORE_SIMULATE_HPP
#define MISTORE_SIMULATE_HPP

/** @file
 * Seeded realizations of truncated ARFI processes.
 *
 * Random numbers: replicate i of seed s draws from a std::mt19937_64 seeded
 * with splitmix64(s ^ splitmix64(i)); uniforms are ((u >> 11) + 0.5) 2^-53 and
 * Gaussian pairs come from the Box-Muller transform
 * (sqrt(-2 ln u1) cos(2 pi u2), sqrt(-2 ln u1) sin(2 pi u2)).
 */

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mistore/fracdiff.hpp"

namespace mistore {

std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal variates for one (seed, stream) pair.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream);

  double next();
  double uniform();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SimSpec {
  ArfiModel model = ArfiModel::white_noise();
  int q = kDefaultTruncationLag;
  std::size_t n = 300;
  int reps = 1;
  std::uint64_t seed = 0;
  std::optional<std::size_t> burnin;  ///< default 1000 + q

  std::size_t effective_burnin() const;
  void validate() const;
};

/// x[n] = sum_k B_k x[n-k] + e[n] from zero initial conditions with
/// e ~ N(0, sigma2_e); the first burnin samples are discarded.
std::vector<double> generate_replicate(const SimSpec& spec, int replicate);

/// All replicates, in index order.
std::vector<std::vector<double>> generate_arfi(const SimSpec& spec);

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). fn must only touch state owned by index i.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn);

}  // namespace mistore

#include "mistore/detail/parallel.hpp"

#endif  // MISTORE_SIMULATE_HPP
