#include "mistore/mistore.h"

#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "mistore/baseline.hpp"
#include "mistore/error.hpp"
#include "mistore/estimation.hpp"
#include "mistore/fracdiff.hpp"
#include "mistore/simulate.hpp"
#include "mistore/statespace.hpp"
#include "mistore/study.hpp"

struct mistore_model {
  mistore::ArfiModel model;
};

struct mistore_profile {
  mistore::MultiscaleProfile profile;
};

struct mistore_fit {
  mistore::FitResult result;
  mistore::Significance significance;
};

struct mistore_study {
  mistore::StudyResult result;
  std::string config_text;
  std::vector<std::string> labels;
  std::vector<std::string> poles;
};

namespace {

thread_local std::string last_error;

mistore_status fail(mistore_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class Fn>
mistore_status guarded(Fn&& fn) {
  try {
    fn();
    return MISTORE_OK;
  } catch (const mistore::Error& e) {
    switch (e.kind()) {
      case mistore::ErrorKind::InvalidArgument: return fail(MISTORE_E_USAGE, e.what());
      case mistore::ErrorKind::Data: return fail(MISTORE_E_DATA, e.what());
      case mistore::ErrorKind::Numerical: return fail(MISTORE_E_NUMERICAL, e.what());
    }
    return fail(MISTORE_E_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MISTORE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MISTORE_E_INTERNAL, e.what());
  } catch (...) {
    return fail(MISTORE_E_INTERNAL, "unknown error");
  }
}

mistore_status null_arg(const char* name) {
  return fail(MISTORE_E_USAGE, std::string("null argument: ") + name);
}

size_t copy_out(const std::vector<double>& v, double* out, size_t capacity) {
  if (out) {
    for (size_t i = 0; i < v.size() && i < capacity; ++i) out[i] = v[i];
  }
  return v.size();
}

mistore::ToleranceBasis to_basis(mistore_tolerance_basis b) {
  return b == MISTORE_TOL_INNOVATION_SD ? mistore::ToleranceBasis::InnovationSd
                                        : mistore::ToleranceBasis::SeriesSd;
}

}  // namespace

extern "C" {

const char* mistore_version(void) { return MISTORE_VERSION_STRING; }

const char* mistore_last_error(void) { return last_error.c_str(); }

mistore_status mistore_model_from_ar(const double* a, size_t p, double d, double sigma2,
                                     mistore_model** out) {
  if (!out) return null_arg("out");
  if (p > 0 && !a) return null_arg("a");
  *out = nullptr;
  return guarded([&] {
    *out = new mistore_model{mistore::ArfiModel(std::vector<double>(a, a + p), d, sigma2)};
  });
}

mistore_status mistore_model_from_poles(const double* moduli, const double* frequencies,
                                        size_t npairs, double d, double sigma2,
                                        mistore_model** out) {
  if (!out) return null_arg("out");
  if (npairs > 0 && (!moduli || !frequencies)) return null_arg("poles");
  *out = nullptr;
  return guarded([&] {
    std::vector<mistore::Pole> poles;
    for (size_t i = 0; i < npairs; ++i) poles.push_back({moduli[i], frequencies[i]});
    const auto poly = mistore::poles_to_ar(poles);
    const auto b = poly.coefficients();
    *out = new mistore_model{mistore::ArfiModel({b.begin(), b.end()}, d, sigma2)};
  });
}

void mistore_model_free(mistore_model* model) { delete model; }

double mistore_model_d(const mistore_model* model) {
  return model ? model->model.d() : std::numeric_limits<double>::quiet_NaN();
}

double mistore_model_sigma2(const mistore_model* model) {
  return model ? model->model.sigma2_e() : std::numeric_limits<double>::quiet_NaN();
}

size_t mistore_model_ar(const mistore_model* model, double* out, size_t capacity) {
  if (!model) return 0;
  const auto a = model->model.ar();
  return copy_out({a.begin(), a.end()}, out, capacity);
}

int mistore_model_d_warning(const mistore_model* model) {
  return model && model->model.d_outside_recommended_range() ? 1 : 0;
}

mistore_status mistore_profile_compute(const mistore_model* model, int q, int r, const int* taus,
                                       size_t ntaus, mistore_profile** out) {
  if (!out) return null_arg("out");
  if (!model) return null_arg("model");
  if (ntaus > 0 && !taus) return null_arg("taus");
  *out = nullptr;
  return guarded([&] {
    *out = new mistore_profile{
        mistore::multiscale_storage(model->model, q, r, std::span<const int>(taus, ntaus))};
  });
}

void mistore_profile_free(mistore_profile* profile) { delete profile; }

size_t mistore_profile_size(const mistore_profile* profile) {
  return profile ? profile->profile.entries.size() : 0;
}

mistore_status mistore_profile_entry(const mistore_profile* profile, size_t index,
                                     mistore_scale_entry* out) {
  if (!profile) return null_arg("profile");
  if (!out) return null_arg("out");
  if (index >= profile->profile.entries.size()) return fail(MISTORE_E_USAGE, "index out of range");
  const auto& e = profile->profile.entries[index];
  *out = {e.tau, e.f_tau, e.storage, e.sigma2_x, e.sigma2_e,
          e.lyapunov_residual, e.dare_residual, e.dare_iterations};
  return MISTORE_OK;
}

size_t mistore_profile_warning_count(const mistore_profile* profile) {
  return profile ? profile->profile.warnings.size() : 0;
}

const char* mistore_profile_warning(const mistore_profile* profile, size_t index) {
  if (!profile || index >= profile->profile.warnings.size()) return nullptr;
  return profile->profile.warnings[index].c_str();
}

void mistore_fit_config_default(mistore_fit_config* config) {
  if (!config) return;
  const mistore::FitConfig d;
  config->mode = MISTORE_FIT_EARFI;
  config->q = d.q;
  config->pmin = d.pmin;
  config->pmax = d.pmax;
  config->bandwidth_exponent = d.bandwidth_exponent;
  config->remove_mean = d.remove_mean ? 1 : 0;
}

mistore_status mistore_fit_series(const double* x, size_t n, const mistore_fit_config* config,
                                  mistore_fit** out) {
  if (!out) return null_arg("out");
  if (!config) return null_arg("config");
  if (n > 0 && !x) return null_arg("x");
  *out = nullptr;
  return guarded([&] {
    mistore::FitConfig fc;
    switch (config->mode) {
      case MISTORE_FIT_EAR: fc.mode = mistore::FitMode::EAR; break;
      case MISTORE_FIT_EARD: fc.mode = mistore::FitMode::EARD; break;
      case MISTORE_FIT_EARFI: fc.mode = mistore::FitMode::EARFI; break;
      default: mistore::throw_invalid("unknown fit mode");
    }
    fc.q = config->q;
    fc.pmin = config->pmin;
    fc.pmax = config->pmax;
    fc.bandwidth_exponent = config->bandwidth_exponent;
    fc.remove_mean = config->remove_mean != 0;
    auto result = mistore::fit(std::span<const double>(x, n), fc);
    mistore::Significance sig;
    if (fc.mode != mistore::FitMode::EAR) sig = mistore::d_significance(result.d_hat, result.d_stderr);
    *out = new mistore_fit{std::move(result), sig};
  });
}

void mistore_fit_free(mistore_fit* fit) { delete fit; }

mistore_status mistore_fit_get_summary(const mistore_fit* fit, mistore_fit_summary* out) {
  if (!fit) return null_arg("fit");
  if (!out) return null_arg("out");
  const auto& r = fit->result;
  *out = {r.d_hat,
          r.d_stderr,
          fit->significance.lo,
          fit->significance.hi,
          fit->significance.significant ? 1 : 0,
          r.p_selected,
          r.model.sigma2_e(),
          r.n_used};
  return MISTORE_OK;
}

size_t mistore_fit_ar(const mistore_fit* fit, double* out, size_t capacity) {
  if (!fit) return 0;
  const auto a = fit->result.model.ar();
  return copy_out({a.begin(), a.end()}, out, capacity);
}

size_t mistore_fit_bic(const mistore_fit* fit, double* out, size_t capacity) {
  return fit ? copy_out(fit->result.bic_curve, out, capacity) : 0;
}

size_t mistore_fit_warning_count(const mistore_fit* fit) {
  return fit ? fit->result.warnings.size() : 0;
}

const char* mistore_fit_warning(const mistore_fit* fit, size_t index) {
  if (!fit || index >= fit->result.warnings.size()) return nullptr;
  return fit->result.warnings[index].c_str();
}

mistore_status mistore_fit_model(const mistore_fit* fit, mistore_model** out) {
  if (!fit) return null_arg("fit");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new mistore_model{fit->result.model}; });
}

mistore_status mistore_simulate(const mistore_model* model, int q, size_t n, uint64_t seed,
                                int replicate, long long burnin, double* out) {
  if (!model) return null_arg("model");
  if (!out) return null_arg("out");
  return guarded([&] {
    if (replicate < 0) mistore::throw_invalid("replicate index must be >= 0");
    mistore::SimSpec spec;
    spec.model = model->model;
    spec.q = q;
    spec.n = n;
    spec.reps = replicate + 1;
    spec.seed = seed;
    if (burnin >= 0) spec.burnin = static_cast<std::size_t>(burnin);
    const auto x = mistore::generate_replicate(spec, replicate);
    std::copy(x.begin(), x.end(), out);
  });
}

mistore_status mistore_sample_entropy(const double* x, size_t n, int m, double r_factor,
                                      mistore_tolerance_basis basis, double* out, int* defined) {
  if (n > 0 && !x) return null_arg("x");
  if (!out) return null_arg("out");
  return guarded([&] {
    mistore::SampEnConfig cfg{m, r_factor, to_basis(basis)};
    const auto v = mistore::sample_entropy(std::span<const double>(x, n), cfg);
    *out = v.value_or(std::numeric_limits<double>::quiet_NaN());
    if (defined) *defined = v ? 1 : 0;
  });
}

mistore_status mistore_rmse_storage(const double* x, size_t n, const int* taus, size_t ntaus,
                                    int m, double r_factor, mistore_tolerance_basis basis,
                                    double* out) {
  if (n > 0 && !x) return null_arg("x");
  if (ntaus > 0 && (!taus || !out)) return null_arg("taus/out");
  return guarded([&] {
    mistore::SampEnConfig cfg{m, r_factor, to_basis(basis)};
    const auto entries = mistore::refined_mse_storage(std::span<const double>(x, n),
                                                      std::span<const int>(taus, ntaus), cfg);
    for (size_t i = 0; i < entries.size(); ++i) {
      out[i] = entries[i].storage.value_or(std::numeric_limits<double>::quiet_NaN());
    }
  });
}

mistore_status mistore_study_run(const char* config_text, mistore_study** out) {
  if (!config_text) return null_arg("config_text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto cfg = mistore::parse_study_config(config_text);
    auto study = std::make_unique<mistore_study>();
    study->config_text = mistore::format_study_config(cfg);
    study->result = mistore::run_study(cfg);
    for (const auto& cell : study->result.cells) {
      study->labels.push_back(cell.label());
      study->poles.push_back(mistore::format_pole_set(cfg.pole_sets[cell.pole_set]));
    }
    *out = study.release();
  });
}

void mistore_study_free(mistore_study* study) { delete study; }

const char* mistore_study_config(const mistore_study* study) {
  return study ? study->config_text.c_str() : nullptr;
}

size_t mistore_study_cell_count(const mistore_study* study) {
  return study ? study->result.cells.size() : 0;
}

size_t mistore_study_tau_count(const mistore_study* study) {
  return study ? study->result.taus.size() : 0;
}

mistore_status mistore_study_get_cell(const mistore_study* study, size_t cell,
                                      mistore_study_cell* out) {
  if (!study) return null_arg("study");
  if (!out) return null_arg("out");
  if (cell >= study->result.cells.size()) return fail(MISTORE_E_USAGE, "cell index out of range");
  const auto& c = study->result.cells[cell];
  out->label = study->labels[cell].c_str();
  out->poles = study->poles[cell].c_str();
  out->estimator = mistore::to_string(c.estimator).data();
  out->d = c.d;
  out->n = c.n;
  out->failures = c.failures.size();
  return MISTORE_OK;
}

mistore_status mistore_study_get_row(const mistore_study* study, size_t cell, size_t row,
                                     mistore_study_row* out) {
  if (!study) return null_arg("study");
  if (!out) return null_arg("out");
  if (cell >= study->result.cells.size() || row >= study->result.cells[cell].rows.size()) {
    return fail(MISTORE_E_USAGE, "index out of range");
  }
  const auto& r = study->result.cells[cell].rows[row];
  *out = {r.tau, r.f_tau, r.theory, r.median, r.p10, r.p90, r.missing_fraction};
  return MISTORE_OK;
}

const char* mistore_study_failure(const mistore_study* study, size_t cell, size_t index) {
  if (!study || cell >= study->result.cells.size()) return nullptr;
  const auto& f = study->result.cells[cell].failures;
  return index < f.size() ? f[index].c_str() : nullptr;
}

double mistore_study_max_residual(const mistore_study* study) {
  return study ? study->result.max_solver_residual : std::numeric_limits<double>::quiet_NaN();
}

}  // extern "C"
