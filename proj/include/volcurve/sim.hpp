#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "volcurve/design.hpp"
#include "volcurve/proxy.hpp"

namespace volcurve {

enum class Shape { none, linear, ushape };

Shape parse_shape(std::string_view name);
std::string_view to_string(Shape shape);

/// True volume effect used by the generator: 0, (3/100)(100 - n) or
/// (1/1000)(n - 100)^2.
double true_volume_effect(Shape shape, double n);

double logit(double p);

// Data-generating parameters. Defaults are the baseline study values.
struct SimConfig {
  int I = 200;
  double mu_n = 100.0;
  double tau = 0.5;
  double pi1 = 0.3;
  double beta0 = logit(0.1);
  double beta1 = 0.3;
  double beta2 = 0.5;
  Shape shape = Shape::ushape;

  void validate() const;
  // beta0 taken as logistic(0.1) instead of logit(0.1).
  static double literal_beta0();
  // Canonical text form, used for stable seeding.
  std::string key() const;
};

struct SimData {
  std::vector<PatientRecord> records;
  std::vector<std::string> provider_ids;
  std::vector<int> caseloads;
  std::vector<double> provider_effects;
};

/// Clustered binary outcomes. Per provider: caseload ~ Poisson(mu_n)
/// (zero redrawn), u ~ N(0, tau^2); per patient: x1 ~ Bernoulli(pi1),
/// x2 ~ N(0, 1), y ~ Bernoulli(logistic(beta0 + beta1 x1 + beta2 x2 +
/// f(caseload) + u)). Identical seeds give identical data.
SimData generate(const SimConfig& config, std::uint64_t seed);

// Multi-year variant: yearly volumes drift around a provider-specific mean,
// some years are empty, and the volume entering the outcome is the
// cumulative average of non-zero yearly volumes.
struct MultiYearConfig {
  int I = 60;
  int first_year = 2014;
  int n_years = 5;
  int history_years = 2;  // volume-only years before first_year
  double mu_n = 100.0;
  double provider_volume_sd = 0.3;  // sd of log mean volume across providers
  double p_empty_year = 0.05;
  double tau = 0.5;
  double pi1 = 0.3;
  double beta0 = logit(0.1);
  double beta1 = 0.3;
  double beta2 = 0.5;
  std::vector<double> year_effects{0.0, 0.05, -0.05, 0.1, 0.0};
  Shape shape = Shape::linear;
};

struct MultiYearData {
  std::vector<PatientRecord> records;
  VolumeTable volumes;
  std::vector<double> provider_effects;
};

MultiYearData generate_multi_year(const MultiYearConfig& config, std::uint64_t seed);

struct StudyOptions {
  SplineConfig spline;
  std::vector<double> curve_grid{60, 70, 80, 90, 100, 110, 120, 130, 140};
  double or_v1 = 90.0;
  double or_v2 = 100.0;
};

struct StudyResult {
  int config_index = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  SimConfig config;
  bool ok = false;
  std::string error;
  double tau_hat = 0.0;
  bool tau_boundary = false;
  double edf_volume = 0.0;
  double p_smooth = 1.0;
  double p_tau = 1.0;
  double or_hat = 0.0;
  double or_lower = 0.0;
  double or_upper = 0.0;
  std::vector<double> curve;  // f_hat on StudyOptions::curve_grid, NaN outside support
};

/// Seed of one replicate, derived from the base seed, the configuration
/// content and the replicate index only.
std::uint64_t replicate_seed(std::uint64_t base_seed, const SimConfig& config, int replicate);

/// generate -> assemble (caseload volume) -> optimize -> tests, OR, curve.
/// Failures are recorded in the result instead of thrown.
StudyResult run_replicate(const SimConfig& config, std::uint64_t seed, const StudyOptions& options = {});

/// All (config, replicate) pairs, run on up to `jobs` threads. The result
/// order is (config, replicate) regardless of scheduling.
std::vector<StudyResult> run_study(const std::vector<SimConfig>& configs, int n_reps,
                                   std::uint64_t base_seed, int jobs,
                                   const StudyOptions& options = {});

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

Quartiles quartiles(std::vector<double> values);

struct StudySummary {
  int config_index = 0;
  SimConfig config;
  int n_ok = 0;
  int n_failed = 0;
  Quartiles tau_hat;
  Quartiles p_smooth;
  Quartiles p_tau;
  Quartiles or_hat;
  double reject_smooth = 0.0;      // share with p_smooth <= 0.05
  double p_tau_below_1e9 = 0.0;    // share with p_tau < 1e-9
  double or_true = 1.0;
  double or_coverage = 0.0;        // share of OR intervals containing or_true
};

std::vector<StudySummary> summarize(const std::vector<StudyResult>& results,
                                    const StudyOptions& options = {});

}  // namespace volcurve
