#include "volcurve/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "volcurve/error.hpp"
#include "volcurve/fit.hpp"
#include "volcurve/inference.hpp"

namespace volcurve {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string provider_name(int index, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%0*d", width, index + 1);
  return buf;
}

int id_width(int n) { return std::max(4, static_cast<int>(std::to_string(n).size())); }

int draw_caseload(std::mt19937_64& engine, double mu) {
  boost::random::poisson_distribution<int, double> poisson(mu);
  int n = 0;
  // A provider without patients is dropped by design; redraw.
  while (n == 0) n = poisson(engine);
  return n;
}

}  // namespace

Shape parse_shape(std::string_view name) {
  if (name == "none") return Shape::none;
  if (name == "linear") return Shape::linear;
  if (name == "ushape") return Shape::ushape;
  throw Error(ErrorCode::invalid_argument, "unknown shape '" + std::string(name) + "'");
}

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::none: return "none";
    case Shape::linear: return "linear";
    case Shape::ushape: return "ushape";
  }
  return "none";
}

double true_volume_effect(Shape shape, double n) {
  switch (shape) {
    case Shape::none: return 0.0;
    case Shape::linear: return 3.0 / 100.0 * (100.0 - n);
    case Shape::ushape: return (n - 100.0) * (n - 100.0) / 1000.0;
  }
  return 0.0;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

void SimConfig::validate() const {
  if (I < 2) throw Error(ErrorCode::invalid_argument, "need at least two providers");
  if (!(mu_n > 0.0)) throw Error(ErrorCode::invalid_argument, "mu_n must be positive");
  if (!(tau >= 0.0)) throw Error(ErrorCode::invalid_argument, "tau must be non-negative");
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw Error(ErrorCode::invalid_argument, "pi1 must lie in (0, 1)");
}

double SimConfig::literal_beta0() { return logistic(0.1); }

std::string SimConfig::key() const {
  std::ostringstream out;
  out.precision(17);
  out << "I=" << I << ";mu_n=" << mu_n << ";tau=" << tau << ";pi1=" << pi1 << ";beta0=" << beta0
      << ";beta1=" << beta1 << ";beta2=" << beta2 << ";shape=" << to_string(shape);
  return out.str();
}

SimData generate(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> provider_effect(0.0, config.tau);
  boost::random::normal_distribution<double> standard_normal(0.0, 1.0);
  boost::random::bernoulli_distribution<double> risk(config.pi1);

  SimData data;
  const int width = id_width(config.I);
  data.records.reserve(static_cast<std::size_t>(config.I * config.mu_n * 1.1));
  for (int i = 0; i < config.I; ++i) {
    const int n = draw_caseload(engine, config.mu_n);
    const double u = config.tau > 0.0 ? provider_effect(engine) : 0.0;
    const std::string id = provider_name(i, width);
    data.provider_ids.push_back(id);
    data.caseloads.push_back(n);
    data.provider_effects.push_back(u);
    const double base = config.beta0 + true_volume_effect(config.shape, n) + u;
    for (int j = 0; j < n; ++j) {
      const double x1 = risk(engine) ? 1.0 : 0.0;
      const double x2 = standard_normal(engine);
      const double p = logistic(base + config.beta1 * x1 + config.beta2 * x2);
      boost::random::bernoulli_distribution<double> outcome(p);
      PatientRecord r;
      r.provider_id = id;
      r.year = 0;
      r.outcome = outcome(engine) ? 1 : 0;
      r.covariates.emplace("x1", x1);
      r.covariates.emplace("x2", x2);
      data.records.push_back(std::move(r));
    }
  }
  return data;
}

MultiYearData generate_multi_year(const MultiYearConfig& config, std::uint64_t seed) {
  if (config.I < 2 || config.n_years < 1 || config.history_years < 0) {
    throw Error(ErrorCode::invalid_argument, "invalid multi-year configuration");
  }
  if (static_cast<int>(config.year_effects.size()) < config.n_years) {
    throw Error(ErrorCode::invalid_argument, "need one year effect per analysis year");
  }
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> standard_normal(0.0, 1.0);
  boost::random::bernoulli_distribution<double> risk(config.pi1);
  boost::random::bernoulli_distribution<double> empty_year(config.p_empty_year);

  MultiYearData data;
  const int width = id_width(config.I);
  const int start = config.first_year - config.history_years;
  for (int i = 0; i < config.I; ++i) {
    const std::string id = provider_name(i, width);
    const double mean = config.mu_n * std::exp(config.provider_volume_sd * standard_normal(engine));
    const double u = config.tau * standard_normal(engine);
    data.provider_effects.push_back(u);
    boost::random::poisson_distribution<int, double> poisson(mean);
    for (int year = start; year < config.first_year + config.n_years; ++year) {
      const int volume = empty_year(engine) ? 0 : poisson(engine);
      data.volumes.add(id, year, volume);
      if (year < config.first_year || volume == 0) continue;
      const double v = cumulative_average(data.volumes, id, year);
      const double base = config.beta0 + config.year_effects[year - config.first_year] +
                          true_volume_effect(config.shape, v) + u;
      for (int j = 0; j < volume; ++j) {
        const double x1 = risk(engine) ? 1.0 : 0.0;
        const double x2 = standard_normal(engine);
        boost::random::bernoulli_distribution<double> outcome(
            logistic(base + config.beta1 * x1 + config.beta2 * x2));
        PatientRecord r;
        r.provider_id = id;
        r.year = year;
        r.outcome = outcome(engine) ? 1 : 0;
        r.covariates.emplace("x1", x1);
        r.covariates.emplace("x2", x2);
        data.records.push_back(std::move(r));
      }
    }
  }
  return data;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, const SimConfig& config, int replicate) {
  std::uint64_t s = splitmix64(base_seed);
  s = splitmix64(s ^ fnv1a(config.key()));
  return splitmix64(s ^ static_cast<std::uint64_t>(replicate));
}

StudyResult run_replicate(const SimConfig& config, std::uint64_t seed, const StudyOptions& options) {
  StudyResult r;
  r.seed = seed;
  r.config = config;
  r.curve.assign(options.curve_grid.size(), std::numeric_limits<double>::quiet_NaN());
  try {
    const SimData data = generate(config, seed);
    ModelSpec spec;
    spec.linear_terms = {"x1", "x2"};
    spec.smooth_terms = {{std::string(kVolumeCovariate), options.spline}};
    spec.random_intercept = true;
    spec.volume_mode = VolumeMode::caseload;
    const AssembledModel model = assemble(data.records, spec, VolumeTable{});
    const FittedModel fitted = optimize(model);

    r.tau_hat = fitted.tau_hat;
    r.tau_boundary = fitted.tau_at_boundary;
    const TestResult smooth = test_smooth(fitted, kVolumeCovariate);
    r.p_smooth = smooth.p_value;
    for (std::size_t t = 0; t < fitted.layout.index_map.size(); ++t) {
      if (fitted.layout.index_map[t].name == "s(volume)") r.edf_volume = fitted.fit.edf[t];
    }
    r.p_tau = test_tau(model, &fitted).p_value;

    const SmoothTerm& term = fitted.layout.smooth(kVolumeCovariate);
    if (term.basis.in_support(options.or_v1) && term.basis.in_support(options.or_v2)) {
      const OREstimate est = odds_ratio(fitted, options.or_v1, options.or_v2);
      r.or_hat = est.or_hat;
      r.or_lower = est.ci_lower;
      r.or_upper = est.ci_upper;
    } else {
      r.or_hat = r.or_lower = r.or_upper = std::numeric_limits<double>::quiet_NaN();
    }
    Eigen::RowVectorXd row(term.basis.size());
    const Eigen::VectorXd coef = fitted.theta().segment(term.offset, term.basis.size());
    for (std::size_t g = 0; g < options.curve_grid.size(); ++g) {
      const double v = options.curve_grid[g];
      if (!term.basis.in_support(v)) continue;
      term.basis.evaluate_row(v, false, row);
      r.curve[g] = row.dot(coef);
    }
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.error = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

std::vector<StudyResult> run_study(const std::vector<SimConfig>& configs, int n_reps,
                                   std::uint64_t base_seed, int jobs, const StudyOptions& options) {
  if (n_reps < 1) throw Error(ErrorCode::invalid_argument, "n_reps must be at least 1");
  for (const auto& c : configs) c.validate();
  const std::size_t total = configs.size() * static_cast<std::size_t>(n_reps);
  std::vector<StudyResult> results(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      const auto ci = static_cast<int>(idx / n_reps);
      const auto rep = static_cast<int>(idx % n_reps);
      const SimConfig& config = configs[static_cast<std::size_t>(ci)];
      StudyResult r = run_replicate(config, replicate_seed(base_seed, config, rep), options);
      r.config_index = ci;
      r.replicate = rep;
      results[idx] = std::move(r);
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return results;
}

Quartiles quartiles(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::vector<StudySummary> summarize(const std::vector<StudyResult>& results, const StudyOptions& options) {
  std::map<int, std::vector<const StudyResult*>> groups;
  for (const auto& r : results) groups[r.config_index].push_back(&r);

  std::vector<StudySummary> out;
  for (const auto& [index, group] : groups) {
    StudySummary s;
    s.config_index = index;
    s.config = group.front()->config;
    s.or_true = std::exp(true_volume_effect(s.config.shape, options.or_v1) -
                         true_volume_effect(s.config.shape, options.or_v2));
    std::vector<double> tau, ps, pt, ors;
    int reject = 0, tiny = 0, covered = 0, with_or = 0;
    for (const StudyResult* r : group) {
      if (!r->ok) {
        ++s.n_failed;
        continue;
      }
      ++s.n_ok;
      tau.push_back(r->tau_hat);
      ps.push_back(r->p_smooth);
      pt.push_back(r->p_tau);
      ors.push_back(r->or_hat);
      reject += r->p_smooth <= 0.05;
      tiny += r->p_tau < 1e-9;
      if (!std::isnan(r->or_hat)) {
        ++with_or;
        covered += r->or_lower <= s.or_true && s.or_true <= r->or_upper;
      }
    }
    s.tau_hat = quartiles(tau);
    s.p_smooth = quartiles(ps);
    s.p_tau = quartiles(pt);
    s.or_hat = quartiles(ors);
    if (s.n_ok > 0) {
      s.reject_smooth = static_cast<double>(reject) / s.n_ok;
      s.p_tau_below_1e9 = static_cast<double>(tiny) / s.n_ok;
    }
    s.or_coverage = with_or > 0 ? static_cast<double>(covered) / with_or : 0.0;
    out.push_back(s);
  }
  return out;
}

}  // namespace volcurve
