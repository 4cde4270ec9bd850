#ifndef MISTORE_STUDY_HPP
#define MISTORE_STUDY_HPP

/** @file
 * Monte Carlo study over a grid of (pole set, d, N, estimator): simulated
 * replicates are analyzed per estimator and summarized per scale against the
 * theoretical profile of the generating model.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mistore/baseline.hpp"
#include "mistore/estimation.hpp"
#include "mistore/fracdiff.hpp"

namespace mistore {

enum class Estimator { EARFI, EAR, EARD, RMSE };

std::string_view to_string(Estimator e);
std::optional<Estimator> parse_estimator(std::string_view text);

struct StudyConfig {
  std::vector<std::vector<Pole>> pole_sets;
  std::vector<double> d_values;
  std::vector<std::size_t> lengths;
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<Estimator> estimators;

  int q = kDefaultTruncationLag;
  int r = 48;
  int tau_max = 50;
  int pmin = 2;
  int pmax = 16;
  double sigma2 = 1.0;
  std::optional<std::size_t> burnin;
  double bandwidth_exponent = kDefaultBandwidthExponent;
  SampEnConfig sampen;
  unsigned threads = 0;  ///< 0 = hardware concurrency

  void validate() const;
};

/// Parses the flat "key = value" format; '#' starts a comment. Errors name
/// the offending key and line.
StudyConfig parse_study_config(std::string_view text);

/// Inverse of parse_study_config for a resolved configuration; threads are
/// omitted since they do not affect results.
std::string format_study_config(const StudyConfig& config);

/// "0.8:0.1,0.5:0.3;0.9:0.1" -> two pole sets.
std::vector<std::vector<Pole>> parse_pole_sets(std::string_view text);
std::string format_pole_set(const std::vector<Pole>& poles);

struct StudyRow {
  int tau = 1;
  double f_tau = 0.5;
  double theory = 0.0;
  double median = 0.0;  ///< NaN when every replicate is missing
  double p10 = 0.0;
  double p90 = 0.0;
  double missing_fraction = 0.0;
};

struct StudyCell {
  std::size_t pole_set = 0;
  double d = 0.0;
  std::size_t n = 0;
  Estimator estimator = Estimator::EARFI;
  std::vector<StudyRow> rows;
  /// values[rep][k] is the estimate at taus[k] for that replicate.
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::string> failures;  ///< one message per failed replicate
  double max_solver_residual = 0.0;

  std::string label() const;
};

struct StudyResult {
  std::vector<int> taus;
  std::vector<StudyCell> cells;
  double max_solver_residual = 0.0;
};

/// Type-7 quantile of the values, p in [0, 1]; NaN for an empty input.
double quantile(std::vector<double> values, double p);

StudyResult run_study(const StudyConfig& config);

}  // namespace mistore

#endif  // MISTORE_STUDY_HPP
