#include "mistore/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "mistore/error.hpp"
#include "mistore/simulate.hpp"
#include "mistore/statespace.hpp"

namespace mistore {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_field(std::string_view key, const std::string& what) {
  throw_invalid("config field '" + std::string(key) + "': " + what);
}

double to_double(std::string_view key, std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    bad_field(key, "expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

long long to_integer(std::string_view key, std::string_view s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    bad_field(key, "expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

int to_int(std::string_view key, std::string_view s, long long lo) {
  const long long v = to_integer(key, s);
  if (v < lo || v > std::numeric_limits<int>::max()) {
    bad_field(key, "value " + std::string(s) + " out of range");
  }
  return static_cast<int>(v);
}

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& format) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ',';
    out += format(item);
  }
  return out;
}

std::vector<std::optional<double>> profile_values(const MultiscaleProfile& profile) {
  std::vector<std::optional<double>> out;
  out.reserve(profile.entries.size());
  for (const auto& e : profile.entries) out.emplace_back(e.storage);
  return out;
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::EARFI: return "earfi";
    case Estimator::EAR: return "ear";
    case Estimator::EARD: return "eard";
    case Estimator::RMSE: return "rmse";
  }
  return "?";
}

std::optional<Estimator> parse_estimator(std::string_view text) {
  if (text == "rmse") return Estimator::RMSE;
  if (const auto mode = parse_fit_mode(text)) {
    switch (*mode) {
      case FitMode::EARFI: return Estimator::EARFI;
      case FitMode::EAR: return Estimator::EAR;
      case FitMode::EARD: return Estimator::EARD;
    }
  }
  return std::nullopt;
}

std::vector<std::vector<Pole>> parse_pole_sets(std::string_view text) {
  std::vector<std::vector<Pole>> sets;
  for (auto set_text : split(text, ';')) {
    if (set_text.empty()) bad_field("poles", "empty pole set");
    std::vector<Pole> set;
    for (auto pair : split(set_text, ',')) {
      const auto parts = split(pair, ':');
      if (parts.size() != 2) bad_field("poles", "expected modulus:frequency, got '" + std::string(pair) + "'");
      set.push_back({to_double("poles", parts[0]), to_double("poles", parts[1])});
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::string format_pole_set(const std::vector<Pole>& poles) {
  return join(poles, [](const Pole& p) { return fmt(p.modulus) + ':' + fmt(p.frequency); });
}

void StudyConfig::validate() const {
  if (pole_sets.empty()) bad_field("poles", "at least one pole set required");
  for (const auto& set : pole_sets) {
    try {
      (void)poles_to_ar(set);
    } catch (const Error& e) {
      bad_field("poles", e.what());
    }
  }
  if (d_values.empty()) bad_field("d", "at least one value required");
  for (double d : d_values) {
    if (!(d > -0.5 && d < 1.0)) bad_field("d", "value " + fmt(d) + " outside (-0.5, 1)");
  }
  if (lengths.empty()) bad_field("n", "at least one length required");
  for (auto n : lengths) {
    if (n < 64) bad_field("n", "series length must be >= 64");
  }
  if (reps < 1) bad_field("reps", "must be >= 1");
  if (estimators.empty()) bad_field("estimators", "at least one estimator required");
  if (q < 0) bad_field("q", "must be >= 0");
  if (r < 0 || r % 2 != 0) bad_field("r", "must be an even order >= 0");
  if (tau_max < 1) bad_field("tau_max", "must be >= 1");
  if (pmin < 1 || pmax < pmin) bad_field("pmax", "need 1 <= pmin <= pmax");
  if (!(sigma2 > 0.0)) bad_field("sigma2", "must be positive");
  if (burnin && *burnin < static_cast<std::size_t>(q)) bad_field("burnin", "must be >= q");
  if (!(bandwidth_exponent > 0.0 && bandwidth_exponent < 1.0)) {
    bad_field("bandwidth", "exponent must lie in (0, 1)");
  }
  if (sampen.m < 1) bad_field("sampen_m", "must be >= 1");
  if (!(sampen.r_factor > 0.0)) bad_field("sampen_r", "must be positive");
}

StudyConfig parse_study_config(std::string_view text) {
  StudyConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw_invalid("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.emplace(key).second) bad_field(key, "given more than once");
    if (value.empty()) bad_field(key, "missing value");

    if (key == "poles") {
      cfg.pole_sets = parse_pole_sets(value);
    } else if (key == "d") {
      for (auto v : split(value, ',')) cfg.d_values.push_back(to_double(key, v));
    } else if (key == "n") {
      for (auto v : split(value, ',')) cfg.lengths.push_back(static_cast<std::size_t>(to_int(key, v, 1)));
    } else if (key == "reps") {
      cfg.reps = to_int(key, value, 1);
    } else if (key == "seed") {
      const long long s = to_integer(key, value);
      if (s < 0) bad_field(key, "must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "estimators") {
      for (auto v : split(value, ',')) {
        const auto e = parse_estimator(v);
        if (!e) bad_field(key, "unknown estimator '" + std::string(v) + "'");
        if (std::find(cfg.estimators.begin(), cfg.estimators.end(), *e) == cfg.estimators.end()) {
          cfg.estimators.push_back(*e);
        }
      }
    } else if (key == "q") {
      cfg.q = to_int(key, value, 0);
    } else if (key == "r") {
      cfg.r = to_int(key, value, 0);
    } else if (key == "tau_max") {
      cfg.tau_max = to_int(key, value, 1);
    } else if (key == "pmin") {
      cfg.pmin = to_int(key, value, 1);
    } else if (key == "pmax") {
      cfg.pmax = to_int(key, value, 1);
    } else if (key == "sigma2") {
      cfg.sigma2 = to_double(key, value);
    } else if (key == "burnin") {
      cfg.burnin = static_cast<std::size_t>(to_int(key, value, 0));
    } else if (key == "bandwidth") {
      cfg.bandwidth_exponent = to_double(key, value);
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(to_int(key, value, 0));
    } else if (key == "sampen_m") {
      cfg.sampen.m = to_int(key, value, 1);
    } else if (key == "sampen_r") {
      cfg.sampen.r_factor = to_double(key, value);
    } else if (key == "sampen_basis") {
      if (value == "series") {
        cfg.sampen.basis = ToleranceBasis::SeriesSd;
      } else if (value == "innovation") {
        cfg.sampen.basis = ToleranceBasis::InnovationSd;
      } else {
        bad_field(key, "expected 'series' or 'innovation'");
      }
    } else {
      bad_field(key, "unknown key");
    }
  }
  for (const char* required : {"poles", "d", "n", "reps", "seed", "estimators"}) {
    if (!seen.contains(std::string_view(required))) bad_field(required, "missing required field");
  }
  cfg.validate();
  return cfg;
}

std::string format_study_config(const StudyConfig& c) {
  std::string poles;
  for (const auto& set : c.pole_sets) {
    if (!poles.empty()) poles += ';';
    poles += format_pole_set(set);
  }
  std::ostringstream out;
  out << "poles = " << poles << '\n'
      << "d = " << join(c.d_values, fmt) << '\n'
      << "n = " << join(c.lengths, [](std::size_t n) { return std::to_string(n); }) << '\n'
      << "reps = " << c.reps << '\n'
      << "seed = " << c.seed << '\n'
      << "estimators = "
      << join(c.estimators, [](Estimator e) { return std::string(to_string(e)); }) << '\n'
      << "q = " << c.q << '\n'
      << "r = " << c.r << '\n'
      << "tau_max = " << c.tau_max << '\n'
      << "pmin = " << c.pmin << '\n'
      << "pmax = " << c.pmax << '\n'
      << "sigma2 = " << fmt(c.sigma2) << '\n';
  if (c.burnin) out << "burnin = " << *c.burnin << '\n';
  out << "bandwidth = " << fmt(c.bandwidth_exponent) << '\n'
      << "sampen_m = " << c.sampen.m << '\n'
      << "sampen_r = " << fmt(c.sampen.r_factor) << '\n'
      << "sampen_basis = "
      << (c.sampen.basis == ToleranceBasis::SeriesSd ? "series" : "innovation") << '\n';
  return out.str();
}

std::string StudyCell::label() const {
  std::ostringstream os;
  os << "poles" << pole_set << "_d" << d << "_n" << n << '_' << to_string(estimator);
  return os.str();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  StudyResult result;
  result.taus = tau_range(config.tau_max);
  const auto& taus = result.taus;
  const std::size_t nest = config.estimators.size();

  for (std::size_t ps = 0; ps < config.pole_sets.size(); ++ps) {
    const ArPolynomial poly = poles_to_ar(config.pole_sets[ps]);
    const auto ar = poly.coefficients();
    for (double d : config.d_values) {
      const ArfiModel truth({ar.begin(), ar.end()}, d, config.sigma2);
      const MultiscaleProfile theory = multiscale_storage(truth, config.q, config.r, taus);
      result.max_solver_residual = std::max(result.max_solver_residual, theory.max_residual());

      for (std::size_t n : config.lengths) {
        SimSpec spec;
        spec.model = truth;
        spec.q = config.q;
        spec.n = n;
        spec.reps = config.reps;
        spec.seed = config.seed;
        spec.burnin = config.burnin;

        std::vector<StudyCell> cells(nest);
        for (std::size_t e = 0; e < nest; ++e) {
          cells[e].pole_set = ps;
          cells[e].d = d;
          cells[e].n = n;
          cells[e].estimator = config.estimators[e];
          cells[e].values.assign(static_cast<std::size_t>(config.reps),
                                 std::vector<std::optional<double>>(taus.size()));
        }
        // Per-replicate scratch, merged in index order afterwards.
        std::vector<std::vector<std::string>> failure(nest * static_cast<std::size_t>(config.reps));
        std::vector<double> residual(nest * static_cast<std::size_t>(config.reps), 0.0);

        parallel_for(static_cast<std::size_t>(config.reps), config.threads, [&](std::size_t rep) {
          const auto series = generate_replicate(spec, static_cast<int>(rep));
          for (std::size_t e = 0; e < nest; ++e) {
            auto& slot = cells[e].values[rep];
            const std::size_t k = e * static_cast<std::size_t>(config.reps) + rep;
            try {
              if (config.estimators[e] == Estimator::RMSE) {
                const auto rmse = refined_mse_storage(series, taus, config.sampen);
                for (std::size_t t = 0; t < taus.size(); ++t) slot[t] = rmse[t].storage;
                continue;
              }
              FitConfig fc;
              fc.mode = config.estimators[e] == Estimator::EAR    ? FitMode::EAR
                        : config.estimators[e] == Estimator::EARD ? FitMode::EARD
                                                                  : FitMode::EARFI;
              fc.q = config.q;
              fc.pmin = config.pmin;
              fc.pmax = config.pmax;
              fc.bandwidth_exponent = config.bandwidth_exponent;
              const FitResult fitted = fit(series, fc);
              const auto profile = multiscale_storage(fitted.model, config.q, config.r, taus);
              slot = profile_values(profile);
              residual[k] = profile.max_residual();
            } catch (const Error& err) {
              failure[k].push_back("replicate " + std::to_string(rep) + ": " + err.what());
            }
          }
        });

        for (std::size_t e = 0; e < nest; ++e) {
          auto& cell = cells[e];
          for (int rep = 0; rep < config.reps; ++rep) {
            const std::size_t k = e * static_cast<std::size_t>(config.reps) + static_cast<std::size_t>(rep);
            for (auto& msg : failure[k]) cell.failures.push_back(std::move(msg));
            cell.max_solver_residual = std::max(cell.max_solver_residual, residual[k]);
          }
          result.max_solver_residual = std::max(result.max_solver_residual, cell.max_solver_residual);
          for (std::size_t t = 0; t < taus.size(); ++t) {
            std::vector<double> present;
            for (const auto& rep_values : cell.values) {
              if (rep_values[t]) present.push_back(*rep_values[t]);
            }
            StudyRow row;
            row.tau = taus[t];
            row.f_tau = 1.0 / (2.0 * taus[t]);
            row.theory = theory.entries[t].storage;
            row.median = quantile(present, 0.5);
            row.p10 = quantile(present, 0.1);
            row.p90 = quantile(present, 0.9);
            row.missing_fraction = 1.0 - static_cast<double>(present.size()) / config.reps;
            cell.rows.push_back(row);
          }
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return result;
}

}  // namespace mistore
