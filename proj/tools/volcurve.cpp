#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "volcurve/design.hpp"
#include "volcurve/error.hpp"
#include "volcurve/fit.hpp"
#include "volcurve/inference.hpp"
#include "volcurve/io.hpp"
#include "volcurve/log.hpp"
#include "volcurve/sim.hpp"

using nlohmann::json;
using namespace volcurve;

namespace {

struct RunConfig {
  std::string patients;
  std::string volumes;
  std::string spec;
  std::string fit;
  std::string config;
  std::string out;
  std::string summary;
  std::string volumes_out;
  std::string pairs = "20:40,20:70,20:100";
  std::string volume_mode;
  std::string shape;
  double alpha = 0.05;
  int grid_size = 200;
  int n_draws = 10000;
  std::uint64_t seed = 1;
  int jobs = 1;
  int reps = 50;
  int providers = 0;
  double tau = -1.0;
  bool clamp_volume = false;
  bool beta0_literal = false;
  bool strict_appendix_a = false;
  bool multi_year = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
    if (grid_size < 2) throw Error(ErrorCode::invalid_argument, "grid size must be at least 2");
    if (jobs < 1) throw Error(ErrorCode::invalid_argument, "jobs must be at least 1");
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  return out;
}

// Writes to --out, or stdout when it is empty or "-".
void emit(const RunConfig& rc, const std::string& text) {
  if (rc.out.empty() || rc.out == "-") {
    std::cout << text;
    return;
  }
  auto out = open_output(rc.out);
  out << text;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  const auto ext = p.extension().string();
  p.replace_extension();
  return p.string() + "_" + suffix + (ext.empty() ? ".csv" : ext);
}

ModelSpec load_spec(const RunConfig& rc) {
  ModelSpec spec;
  if (!rc.spec.empty()) {
    spec = io::spec_from_json(io::read_json(rc.spec));
  } else {
    spec.smooth_terms = {{std::string(kVolumeCovariate), SplineConfig{}}};
  }
  if (!rc.volume_mode.empty()) spec.volume_mode = io::parse_volume_mode(rc.volume_mode);
  spec.validate();
  return spec;
}

AssembledModel load_model(const RunConfig& rc) {
  if (rc.patients.empty()) throw Error(ErrorCode::invalid_argument, "--patients is required");
  const ModelSpec spec = load_spec(rc);
  const auto records = io::ingest_patients(rc.patients);
  VolumeTable volumes;
  if (!rc.volumes.empty()) {
    volumes = io::ingest_volumes(rc.volumes);
  } else if (spec.uses_volume() && spec.volume_mode != VolumeMode::caseload) {
    throw Error(ErrorCode::invalid_argument, "--volumes is required for averaged volume modes");
  }
  return assemble(records, spec, volumes);
}

// Model from --fit, or fitted from --patients on the spot.
FittedModel load_fitted(const RunConfig& rc) {
  if (!rc.fit.empty()) return io::fitted_from_json(io::read_json(rc.fit));
  return optimize(load_model(rc));
}

const SmoothTerm& volume_term(const FittedModel& fitted) {
  const int index = fitted.layout.volume_smooth_index();
  if (index < 0) throw Error(ErrorCode::invalid_argument, "model has no volume smooth");
  return fitted.layout.smooths[static_cast<std::size_t>(index)];
}

int cmd_fit(const RunConfig& rc) {
  const AssembledModel model = load_model(rc);
  const FittedModel fitted = optimize(model);
  json j = io::fitted_to_json(fitted);
  json tests = json::object();
  for (const auto& s : fitted.layout.smooths) tests[s.covariate] = io::to_json(test_smooth(fitted, s.covariate));
  j["smooth_tests"] = tests;
  if (fitted.has_tau) {
    j["tau_test"] = io::to_json(test_tau(model, &fitted));
    j["mor"] = io::to_json(mor(model, fitted));
  }
  emit(rc, j.dump(2) + "\n");
  return 0;
}

int cmd_curve(const RunConfig& rc) {
  const FittedModel fitted = load_fitted(rc);
  const SmoothTerm& term = volume_term(fitted);
  std::vector<double> grid(static_cast<std::size_t>(rc.grid_size));
  const double lo = term.basis.lower();
  const double hi = term.basis.upper();
  for (int g = 0; g < rc.grid_size; ++g) {
    grid[static_cast<std::size_t>(g)] = g + 1 == rc.grid_size ? hi : lo + (hi - lo) * g / (rc.grid_size - 1);
  }
  CurveOptions options;
  options.alpha = rc.alpha;
  options.n_draws = rc.n_draws;
  options.seed = rc.seed;
  options.clamp = rc.clamp_volume;
  const CurveEstimate curve = smooth_curve(fitted, term.covariate, grid, options);
  const ProbabilityCurve prob = probability_curve(fitted, curve);

  std::ostringstream logit_csv;
  io::write_curve_csv(logit_csv, curve);
  if (rc.out.empty() || rc.out == "-") {
    std::cout << logit_csv.str();
    return 0;
  }
  emit(rc, logit_csv.str());
  auto prob_out = open_output(sibling(rc.out, "probability"));
  io::write_probability_csv(prob_out, prob);
  auto hist_out = open_output(sibling(rc.out, "histogram"));
  io::write_histogram_csv(hist_out, term);
  return 0;
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& text) {
  std::vector<std::pair<double, double>> pairs;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::invalid_argument, "pair '" + item + "' is not v1:v2");
    try {
      pairs.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::invalid_argument, "pair '" + item + "' is not numeric");
    }
  }
  if (pairs.empty()) throw Error(ErrorCode::invalid_argument, "no volume pairs given");
  return pairs;
}

int cmd_or(const RunConfig& rc) {
  const auto pairs = parse_pairs(rc.pairs);
  const FittedModel fitted = load_fitted(rc);
  json out = json::array();
  for (const auto& [v1, v2] : pairs) {
    out.push_back(io::to_json(odds_ratio(fitted, v1, v2, rc.clamp_volume, rc.strict_appendix_a)));
  }
  emit(rc, out.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const RunConfig& rc) {
  std::ostringstream patients;
  if (rc.multi_year) {
    MultiYearConfig c;
    if (rc.providers > 0) c.I = rc.providers;
    if (rc.tau >= 0.0) c.tau = rc.tau;
    if (!rc.shape.empty()) c.shape = parse_shape(rc.shape);
    if (rc.beta0_literal) c.beta0 = SimConfig::literal_beta0();
    const MultiYearData data = generate_multi_year(c, rc.seed);
    io::write_patients(patients, data.records);
    if (!rc.volumes_out.empty()) {
      auto out = open_output(rc.volumes_out);
      io::write_volumes(out, data.volumes);
    }
  } else {
    SimConfig c = rc.config.empty() ? SimConfig{} : io::sim_config_from_json(io::read_json(rc.config));
    if (rc.providers > 0) c.I = rc.providers;
    if (rc.tau >= 0.0) c.tau = rc.tau;
    if (!rc.shape.empty()) c.shape = parse_shape(rc.shape);
    if (rc.beta0_literal) c.beta0 = SimConfig::literal_beta0();
    c.validate();
    io::write_patients(patients, generate(c, rc.seed).records);
  }
  emit(rc, patients.str());
  return 0;
}

int cmd_study(const RunConfig& rc) {
  std::vector<SimConfig> configs;
  if (rc.config.empty()) {
    SimConfig c;
    if (rc.beta0_literal) c.beta0 = SimConfig::literal_beta0();
    configs.push_back(c);
  } else {
    configs = io::study_configs_from_json(io::read_json(rc.config), rc.beta0_literal);
  }
  for (auto& c : configs) {
    if (rc.providers > 0) c.I = rc.providers;
    if (rc.tau >= 0.0) c.tau = rc.tau;
    if (!rc.shape.empty()) c.shape = parse_shape(rc.shape);
  }
  const StudyOptions options;
  const auto results = run_study(configs, rc.reps, rc.seed, rc.jobs, options);
  std::ostringstream csv;
  io::write_study_csv(csv, results, options, rc.seed);
  emit(rc, csv.str());
  if (!rc.summary.empty()) {
    auto out = open_output(rc.summary);
    io::write_summary_csv(out, summarize(results, options));
  }
  return 0;
}

int report(std::string_view code, const std::string& message, int status) {
  const json j = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << j.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();
  RunConfig rc;
  CLI::App app{"Volume-outcome curves from clustered binary outcomes"};
  app.require_subcommand(1);

  auto data_options = [&](CLI::App* cmd) {
    cmd->add_option("--patients", rc.patients, "patient CSV")->check(CLI::ExistingFile);
    cmd->add_option("--volumes", rc.volumes, "yearly provider volume CSV")->check(CLI::ExistingFile);
    cmd->add_option("--spec", rc.spec, "model spec JSON")->check(CLI::ExistingFile);
    cmd->add_option("--volume-mode", rc.volume_mode, "volume proxy")
        ->check(CLI::IsMember({"caseload", "simple", "cumulative"}));
  };

  auto* fit = app.add_subcommand("fit", "fit the model and write it as JSON");
  data_options(fit);

  auto* curve = app.add_subcommand("curve", "volume curve, probability curve and histogram CSVs");
  data_options(curve);
  curve->add_option("--fit", rc.fit, "fitted model JSON")->check(CLI::ExistingFile);
  curve->add_option("--alpha", rc.alpha, "band level is 1 - alpha");
  curve->add_option("--grid-size", rc.grid_size, "number of grid points");
  curve->add_option("--draws", rc.n_draws, "posterior draws for the band");
  curve->add_option("--seed", rc.seed, "seed for the band draws");
  curve->add_flag("--clamp-volume", rc.clamp_volume, "clamp volumes into the basis support");

  auto* odds = app.add_subcommand("or", "odds ratios between volume pairs");
  data_options(odds);
  odds->add_option("--fit", rc.fit, "fitted model JSON")->check(CLI::ExistingFile);
  odds->add_option("--pairs", rc.pairs, "comma separated v1:v2 pairs");
  odds->add_flag("--clamp-volume", rc.clamp_volume, "clamp volumes into the basis support");
  odds->add_flag("--strict-appendix-a", rc.strict_appendix_a, "use the unrooted quadratic form as se");

  auto* simulate = app.add_subcommand("simulate", "write a simulated patient CSV");
  simulate->add_option("--config", rc.config, "simulation config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--seed", rc.seed, "random seed");
  simulate->add_option("--providers", rc.providers, "number of providers");
  simulate->add_option("--tau", rc.tau, "provider effect sd");
  simulate->add_option("--shape", rc.shape, "true volume effect")
      ->check(CLI::IsMember({"none", "linear", "ushape"}));
  simulate->add_flag("--beta0-literal", rc.beta0_literal, "intercept logistic(0.1) instead of logit(0.1)");
  simulate->add_flag("--multi-year", rc.multi_year, "yearly volumes with cumulative averages");
  simulate->add_option("--volumes-out", rc.volumes_out, "volume CSV for --multi-year");

  auto* study = app.add_subcommand("study", "replicated simulation study");
  study->add_option("--config", rc.config, "study config JSON")->check(CLI::ExistingFile);
  study->add_option("--reps", rc.reps, "replicates per configuration");
  study->add_option("--seed", rc.seed, "base seed");
  study->add_option("--jobs", rc.jobs, "worker threads");
  study->add_option("--summary", rc.summary, "per-configuration summary CSV");
  study->add_option("--providers", rc.providers, "number of providers");
  study->add_option("--tau", rc.tau, "provider effect sd");
  study->add_option("--shape", rc.shape, "true volume effect")
      ->check(CLI::IsMember({"none", "linear", "ushape"}));
  study->add_flag("--beta0-literal", rc.beta0_literal, "intercept logistic(0.1) instead of logit(0.1)");

  for (auto* cmd : {fit, curve, odds, simulate, study}) {
    cmd->add_option("--out", rc.out, "output path (stdout if omitted)");
  }
  // Accepted everywhere so scripts can pass a common flag set.
  for (auto* cmd : {fit, odds, simulate, study}) {
    cmd->add_option("--alpha", rc.alpha, "significance level");
  }
  for (auto* cmd : {fit, odds}) cmd->add_option("--seed", rc.seed, "random seed");
  for (auto* cmd : {fit, curve, odds, simulate}) cmd->add_option("--jobs", rc.jobs, "unused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("invalid_argument", e.what(), 2);
  }

  try {
    rc.validate();
    if (*fit) return cmd_fit(rc);
    if (*curve) return cmd_curve(rc);
    if (*odds) return cmd_or(rc);
    if (*simulate) return cmd_simulate(rc);
    if (*study) return cmd_study(rc);
  } catch (const Error& e) {
    return report(to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
  return 1;
}
