#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_io.hpp"
#include "json.hpp"
#include "mistore/mistore.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace mistore::cli;

namespace {

void check(mistore_status status) {
  if (status == MISTORE_OK) return;
  const ExitCode code = status == MISTORE_E_USAGE  ? kUsage
                        : status == MISTORE_E_DATA ? kData
                                                   : kNumerical;
  throw CliError(code, mistore_last_error());
}

struct ModelDeleter {
  void operator()(mistore_model* m) const { mistore_model_free(m); }
};
struct ProfileDeleter {
  void operator()(mistore_profile* p) const { mistore_profile_free(p); }
};
struct FitDeleter {
  void operator()(mistore_fit* f) const { mistore_fit_free(f); }
};
struct StudyDeleter {
  void operator()(mistore_study* s) const { mistore_study_free(s); }
};
using ModelPtr = std::unique_ptr<mistore_model, ModelDeleter>;
using ProfilePtr = std::unique_ptr<mistore_profile, ProfileDeleter>;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double number_or_usage(const std::string& text, const std::string& what) {
  const auto v = parse_number(text);
  if (!v) throw CliError(kUsage, what + ": bad number '" + text + "'");
  return *v;
}

struct ModelOptions {
  std::string poles;
  std::string ar;
  double d = 0.0;
  double sigma2 = 1.0;
  CLI::Option* poles_opt = nullptr;
  CLI::Option* ar_opt = nullptr;

  void add_to(CLI::App* app) {
    poles_opt = app->add_option("--poles", poles, "pole pairs as modulus:frequency,...");
    ar_opt = app->add_option("--ar", ar, "AR coefficients a1,a2,...");
    poles_opt->excludes(ar_opt);
    app->add_option("--d", d, "fractional differencing parameter")->capture_default_str();
    app->add_option("--sigma2", sigma2, "innovation variance")->capture_default_str();
  }

  ModelPtr build() const {
    if (!poles_opt->count() && !ar_opt->count()) {
      throw CliError(kUsage, "exactly one of --poles or --ar is required");
    }
    mistore_model* m = nullptr;
    if (poles_opt->count()) {
      std::vector<double> rho, freq;
      for (const auto& pair : split(poles, ',')) {
        const auto parts = split(pair, ':');
        if (parts.size() != 2) throw CliError(kUsage, "--poles: expected modulus:frequency, got '" + pair + "'");
        rho.push_back(number_or_usage(parts[0], "--poles"));
        freq.push_back(number_or_usage(parts[1], "--poles"));
      }
      check(mistore_model_from_poles(rho.data(), freq.data(), rho.size(), d, sigma2, &m));
    } else {
      std::vector<double> a;
      if (!ar.empty()) {
        for (const auto& t : split(ar, ',')) a.push_back(number_or_usage(t, "--ar"));
      }
      check(mistore_model_from_ar(a.data(), a.size(), d, sigma2, &m));
    }
    return ModelPtr(m);
  }

  void record(ordered_json& params) const {
    if (poles_opt->count()) params["poles"] = poles;
    if (ar_opt->count()) params["ar"] = ar;
    params["d"] = format_number(d);
    params["sigma2"] = format_number(sigma2);
  }
};

std::vector<int> taus_up_to(int tau_max) {
  if (tau_max < 1) throw CliError(kUsage, "--tau-max must be >= 1");
  std::vector<int> taus(static_cast<std::size_t>(tau_max));
  for (int i = 0; i < tau_max; ++i) taus[static_cast<std::size_t>(i)] = i + 1;
  return taus;
}

RunManifest make_manifest(const std::string& command, ordered_json params,
                          const std::string& timestamp) {
  RunManifest m;
  m.command = command;
  m.parameters = std::move(params);
  m.version = mistore_version();
  m.timestamp = timestamp.empty() ? current_timestamp() : timestamp;
  return m;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// Profile rows as a theory table; warnings go to stderr and into comments.
Table profile_table(const mistore_profile* profile, const RunManifest& manifest) {
  Table t;
  t.manifest = manifest;
  for (std::size_t i = 0; i < mistore_profile_warning_count(profile); ++i) {
    const std::string w = mistore_profile_warning(profile, i);
    t.comments.push_back("warning: " + w);
    warn(w);
  }
  t.header = {"tau", "f_tau", "S", "sigma2_x", "sigma2_e"};
  for (std::size_t i = 0; i < mistore_profile_size(profile); ++i) {
    mistore_scale_entry e;
    check(mistore_profile_entry(profile, i, &e));
    t.rows.push_back({static_cast<double>(e.tau), e.f_tau, e.storage, e.sigma2_x, e.sigma2_e});
  }
  return t;
}

struct Cli {
  CLI::App app{"Multiscale information storage of long-range correlated processes"};
  std::string timestamp;

  // theory
  ModelOptions theory_model;
  int theory_q = 50, theory_r = 48, theory_tau_max = 50;
  std::string theory_out = "-";

  // estimate
  std::string est_input, est_mode = "earfi", est_out = "-", est_table;
  int est_q = 50, est_r = 48, est_tau_max = 50, est_pmin = 2, est_pmax = 16;
  double est_bandwidth = 0.65;

  // simulate
  ModelOptions sim_model;
  int sim_q = 50, sim_reps = 1;
  std::size_t sim_n = 300;
  std::uint64_t sim_seed = 0;
  long long sim_burnin = -1;
  std::string sim_out;

  // study
  std::string study_config, study_out;

  // replay
  std::string replay_file, replay_out;

  CLI::App* theory = nullptr;
  CLI::App* estimate = nullptr;
  CLI::App* simulate = nullptr;
  CLI::App* study = nullptr;
  CLI::App* replay = nullptr;

  Cli() {
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mistore_version()));
    app.add_option("--timestamp", timestamp, "manifest timestamp override")->group("");

    theory = app.add_subcommand("theory", "storage profile of an ARFI model");
    theory_model.add_to(theory);
    theory->add_option("--q", theory_q, "truncation lag")->capture_default_str();
    theory->add_option("--r", theory_r, "FIR filter order (even)")->capture_default_str();
    theory->add_option("--tau-max", theory_tau_max, "largest scale")->capture_default_str();
    theory->add_option("--out", theory_out, "output table, - for stdout")->capture_default_str();

    estimate = app.add_subcommand("estimate", "fit a series and compute its storage profile");
    estimate->add_option("--input", est_input, "series file")->required();
    estimate->add_option("--mode", est_mode, "ear, eard or earfi")
        ->check(CLI::IsMember({"ear", "eard", "earfi"}))
        ->capture_default_str();
    estimate->add_option("--q", est_q, "truncation lag")->capture_default_str();
    estimate->add_option("--r", est_r, "FIR filter order (even)")->capture_default_str();
    estimate->add_option("--tau-max", est_tau_max, "largest scale")->capture_default_str();
    estimate->add_option("--pmin", est_pmin, "smallest AR order")->capture_default_str();
    estimate->add_option("--pmax", est_pmax, "largest AR order")->capture_default_str();
    estimate->add_option("--bandwidth", est_bandwidth, "Whittle bandwidth exponent")
        ->capture_default_str();
    estimate->add_option("--out", est_out, "JSON result, - for stdout")->capture_default_str();
    estimate->add_option("--table", est_table, "also write the profile as a table");

    simulate = app.add_subcommand("simulate", "generate ARFI realizations");
    sim_model.add_to(simulate);
    simulate->add_option("--q", sim_q, "truncation lag")->capture_default_str();
    simulate->add_option("--n", sim_n, "samples per replicate")->capture_default_str();
    simulate->add_option("--reps", sim_reps, "replicates")->capture_default_str();
    simulate->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    simulate->add_option("--burnin", sim_burnin, "discarded samples (default 1000 + q)");
    simulate->add_option("--out", sim_out, "output directory")->required();

    study = app.add_subcommand("study", "Monte Carlo study from a config file");
    study->add_option("--config", study_config, "config file")->required();
    study->add_option("--out", study_out, "output directory")->required();

    replay = app.add_subcommand("replay", "rerun the command recorded in a result file");
    replay->add_option("manifest", replay_file, "table, JSON result or manifest.json")->required();
    replay->add_option("--out", replay_out, "override the recorded output path");
  }

  int run_theory() {
    auto model = theory_model.build();
    if (mistore_model_d_warning(model.get())) warn("d >= 0.75: truncated model may be inaccurate");
    const auto taus = taus_up_to(theory_tau_max);
    mistore_profile* raw = nullptr;
    check(mistore_profile_compute(model.get(), theory_q, theory_r, taus.data(), taus.size(), &raw));
    ProfilePtr profile(raw);

    ordered_json params;
    theory_model.record(params);
    params["q"] = theory_q;
    params["r"] = theory_r;
    params["tau-max"] = theory_tau_max;
    params["out"] = theory_out;
    auto table = profile_table(profile.get(), make_manifest("theory", params, timestamp));
    write_text_atomic(theory_out, format_table(table));
    return kOk;
  }

  int run_estimate() {
    const auto x = read_series(est_input);
    if (x.size() < 64) {
      throw CliError(kData, est_input + ": series too short (" + std::to_string(x.size()) +
                                " samples, need at least 64)");
    }
    mistore_fit_config cfg;
    mistore_fit_config_default(&cfg);
    cfg.mode = est_mode == "ear" ? MISTORE_FIT_EAR : est_mode == "eard" ? MISTORE_FIT_EARD : MISTORE_FIT_EARFI;
    cfg.q = est_q;
    cfg.pmin = est_pmin;
    cfg.pmax = est_pmax;
    cfg.bandwidth_exponent = est_bandwidth;
    mistore_fit* raw_fit = nullptr;
    check(mistore_fit_series(x.data(), x.size(), &cfg, &raw_fit));
    std::unique_ptr<mistore_fit, FitDeleter> fit(raw_fit);

    mistore_fit_summary s;
    check(mistore_fit_get_summary(fit.get(), &s));
    std::vector<double> ar(mistore_fit_ar(fit.get(), nullptr, 0));
    mistore_fit_ar(fit.get(), ar.data(), ar.size());
    std::vector<double> bic(mistore_fit_bic(fit.get(), nullptr, 0));
    mistore_fit_bic(fit.get(), bic.data(), bic.size());

    mistore_model* raw_model = nullptr;
    check(mistore_fit_model(fit.get(), &raw_model));
    ModelPtr model(raw_model);
    const auto taus = taus_up_to(est_tau_max);
    mistore_profile* raw_profile = nullptr;
    check(mistore_profile_compute(model.get(), est_q, est_r, taus.data(), taus.size(), &raw_profile));
    ProfilePtr profile(raw_profile);

    ordered_json params;
    params["input"] = est_input;
    params["mode"] = est_mode;
    params["q"] = est_q;
    params["r"] = est_r;
    params["tau-max"] = est_tau_max;
    params["pmin"] = est_pmin;
    params["pmax"] = est_pmax;
    params["bandwidth"] = format_number(est_bandwidth);
    params["out"] = est_out;
    if (!est_table.empty()) params["table"] = est_table;
    const auto manifest = make_manifest("estimate", params, timestamp);

    ordered_json doc;
    doc["manifest"] = manifest.to_json();
    ordered_json f;
    f["mode"] = est_mode;
    f["n"] = x.size();
    f["d_hat"] = s.d_hat;
    f["d_stderr"] = s.d_stderr;
    f["d_significance"] = {{"level", 0.05},
                           {"null_lo", s.d_null_lo},
                           {"null_hi", s.d_null_hi},
                           {"significant", s.d_significant != 0}};
    f["p_selected"] = s.p_selected;
    f["ar"] = ar;
    f["sigma2"] = s.sigma2;
    f["n_used"] = s.n_used;
    f["bic"] = bic;
    doc["fit"] = f;
    ordered_json warnings = ordered_json::array();
    for (std::size_t i = 0; i < mistore_fit_warning_count(fit.get()); ++i) {
      warnings.push_back(mistore_fit_warning(fit.get(), i));
      warn(mistore_fit_warning(fit.get(), i));
    }
    for (std::size_t i = 0; i < mistore_profile_warning_count(profile.get()); ++i) {
      warnings.push_back(mistore_profile_warning(profile.get(), i));
    }
    doc["warnings"] = warnings;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < mistore_profile_size(profile.get()); ++i) {
      mistore_scale_entry e;
      check(mistore_profile_entry(profile.get(), i, &e));
      rows.push_back({{"tau", e.tau},
                      {"f_tau", e.f_tau},
                      {"S", e.storage},
                      {"sigma2_x", e.sigma2_x},
                      {"sigma2_e", e.sigma2_e}});
    }
    doc["profile"] = rows;
    write_text_atomic(est_out, doc.dump(2) + "\n");
    if (!est_table.empty()) {
      write_text_atomic(est_table, format_table(profile_table(profile.get(), manifest)));
    }
    return kOk;
  }

  int run_simulate() {
    auto model = sim_model.build();
    if (sim_reps < 1) throw CliError(kUsage, "--reps must be >= 1");
    if (sim_n < 1) throw CliError(kUsage, "--n must be >= 1");
    std::error_code ec;
    fs::create_directories(sim_out, ec);
    if (ec || !fs::is_directory(sim_out)) {
      throw CliError(kData, "cannot create output directory '" + sim_out + "'");
    }
    ordered_json params;
    sim_model.record(params);
    params["q"] = sim_q;
    params["n"] = sim_n;
    params["reps"] = sim_reps;
    params["seed"] = sim_seed;
    if (sim_burnin >= 0) params["burnin"] = sim_burnin;
    params["out"] = sim_out;
    const auto manifest = make_manifest("simulate", params, timestamp);

    const int width = std::max<int>(4, static_cast<int>(std::to_string(sim_reps - 1).size()));
    ordered_json files = ordered_json::array();
    std::vector<double> x(sim_n);
    for (int rep = 0; rep < sim_reps; ++rep) {
      check(mistore_simulate(model.get(), sim_q, sim_n, sim_seed, rep, sim_burnin, x.data()));
      std::string name = std::to_string(rep);
      name = "series_" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(name.size()))), '0') + name + ".txt";
      write_series(fs::path(sim_out) / name, x);
      files.push_back(name);
    }
    ordered_json doc = manifest.to_json();
    doc["files"] = files;
    write_text_atomic(fs::path(sim_out) / "manifest.json", doc.dump(2) + "\n");
    return kOk;
  }

  int run_study() {
    const std::string text = read_text(study_config);
    mistore_study* raw = nullptr;
    check(mistore_study_run(text.c_str(), &raw));
    std::unique_ptr<mistore_study, StudyDeleter> result(raw);

    std::error_code ec;
    fs::create_directories(study_out, ec);
    if (ec || !fs::is_directory(study_out)) {
      throw CliError(kData, "cannot create output directory '" + study_out + "'");
    }
    ordered_json params;
    params["config"] = study_config;
    params["out"] = study_out;
    const auto manifest = make_manifest("study", params, timestamp);

    ordered_json cells = ordered_json::array();
    for (std::size_t c = 0; c < mistore_study_cell_count(result.get()); ++c) {
      mistore_study_cell cell;
      check(mistore_study_get_cell(result.get(), c, &cell));
      Table t;
      t.manifest = manifest;
      t.comments.push_back(std::string("cell: poles=") + cell.poles + " d=" + format_number(cell.d) +
                           " n=" + std::to_string(cell.n) + " estimator=" + cell.estimator +
                           " failed_replicates=" + std::to_string(cell.failures));
      t.header = {"tau", "f_tau", "theory", "median", "p10", "p90", "missing_fraction"};
      for (std::size_t k = 0; k < mistore_study_tau_count(result.get()); ++k) {
        mistore_study_row r;
        check(mistore_study_get_row(result.get(), c, k, &r));
        t.rows.push_back({static_cast<double>(r.tau), r.f_tau, r.theory, r.median, r.p10, r.p90,
                          r.missing_fraction});
      }
      const std::string file = std::string(cell.label) + ".csv";
      write_text_atomic(fs::path(study_out) / file, format_table(t));

      ordered_json failures = ordered_json::array();
      for (std::size_t i = 0; i < cell.failures; ++i) {
        failures.push_back(mistore_study_failure(result.get(), c, i));
      }
      cells.push_back({{"file", file},
                       {"poles", cell.poles},
                       {"d", cell.d},
                       {"n", cell.n},
                       {"estimator", cell.estimator},
                       {"failures", failures}});
    }
    ordered_json doc = manifest.to_json();
    doc["config"] = mistore_study_config(result.get());
    doc["max_solver_residual"] = mistore_study_max_residual(result.get());
    doc["cells"] = cells;
    write_text_atomic(fs::path(study_out) / "manifest.json", doc.dump(2) + "\n");
    return kOk;
  }

  int dispatch() {
    if (theory->parsed()) return run_theory();
    if (estimate->parsed()) return run_estimate();
    if (simulate->parsed()) return run_simulate();
    if (study->parsed()) return run_study();
    return run_replay();
  }

  int run_replay();
};

int run(std::vector<std::string> args);

int Cli::run_replay() {
  const RunManifest m = read_manifest(replay_file);
  std::vector<std::string> args = {"mistore", "--timestamp", m.timestamp, m.command};
  for (const auto& [key, value] : m.parameters.items()) {
    args.push_back("--" + key);
    if (key == "out" && !replay_out.empty()) {
      args.push_back(replay_out);
    } else {
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return run(args);
}

int run(std::vector<std::string> args) {
  Cli cli;
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  try {
    cli.app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = cli.app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return cli.dispatch();
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }
