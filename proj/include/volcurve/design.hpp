#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "volcurve/proxy.hpp"
#include "volcurve/spline.hpp"

namespace volcurve {

// Covariate name that refers to the provider volume rather than a patient
// column. A smooth term on it is the volume effect.
inline constexpr std::string_view kVolumeCovariate = "volume";

// Provider id meaning "an average provider": zero random intercept.
inline constexpr std::string_view kAverageProvider = "average";

using Covariates = std::map<std::string, double, std::less<>>;

struct PatientRecord {
  std::string provider_id;
  int year = 0;
  int outcome = 0;
  Covariates covariates;
};

struct SmoothSpec {
  std::string covariate;
  SplineConfig config;
};

struct ModelSpec {
  std::vector<std::string> linear_terms;
  std::vector<SmoothSpec> smooth_terms;
  bool year_intercepts = false;
  bool random_intercept = true;
  VolumeMode volume_mode = VolumeMode::caseload;

  // Term names disjoint, spline configs valid.
  void validate() const;
  bool uses_volume() const;
};

enum class TermKind { intercept, year, linear, smooth, provider };

struct TermRange {
  std::string name;
  TermKind kind = TermKind::linear;
  int offset = 0;
  int size = 0;
};

struct SmoothTerm {
  std::string covariate;
  SmoothBasis basis;
  int offset = 0;
  // Distinct training values with their record counts; enough to rebuild
  // the training rows of this block.
  std::vector<std::pair<double, double>> training_values;

  bool is_volume() const { return covariate == kVolumeCovariate; }
};

struct PenaltyBlock {
  std::string name;
  int offset = 0;
  int size = 0;
  // Scaled penalty for smooth blocks; empty for the provider block, whose
  // penalty is the identity.
  Eigen::MatrixXd matrix;
  double scale = 1.0;
  int rank = 0;
  bool provider = false;
};

// Column layout of a model, independent of the training data. This is what
// a fitted model needs to build prediction rows.
struct ModelLayout {
  ModelSpec spec;
  std::vector<TermRange> index_map;
  std::vector<int> years;  // year-intercept levels, sorted
  std::vector<SmoothTerm> smooths;
  std::vector<std::string> provider_ids;  // provider block column order
  std::vector<PenaltyBlock> penalties;
  int n_dense = 0;  // columns before the provider block
  int n_cols = 0;

  const TermRange& term(std::string_view name) const;
  const SmoothTerm& smooth(std::string_view covariate) const;
  // Index into `smooths` of the volume smooth, or -1.
  int volume_smooth_index() const;
  int provider_column(std::string_view provider) const;
  bool has_provider_block() const { return n_cols > n_dense; }

  /// Full-length design row. `provider` may be kAverageProvider (or empty),
  /// leaving the provider block at zero. Throws on missing covariates,
  /// unknown providers or years, and volumes outside the basis support
  /// unless clamp_volume is set.
  Eigen::RowVectorXd design_row(const Covariates& covariates, double volume,
                                std::string_view provider, int year,
                                bool clamp_volume = false) const;
};

// Penalised design. The provider indicator block is stored as one column
// index per record instead of N x I explicit zeros and ones.
struct AssembledModel {
  ModelLayout layout;
  Eigen::MatrixXd dense;             // N x n_dense
  std::vector<int> provider_column;  // per record, offset within provider block
  Eigen::VectorXd y;
  std::vector<double> volumes;       // per record, NaN if the spec has no volume

  Eigen::Index n_obs() const { return y.size(); }
  int n_providers() const { return static_cast<int>(layout.provider_ids.size()); }
  int n_cols() const { return layout.n_cols; }

  // Explicit N x p design matrix; only sensible for small problems.
  Eigen::MatrixXd materialize() const;
  // Same data and dense columns with the provider block dropped.
  AssembledModel without_random_intercept() const;
};

/// Builds the design. Column order: intercept (or one column per year) |
/// linear terms | centered smooth blocks | provider indicators.
AssembledModel assemble(std::span<const PatientRecord> records, const ModelSpec& spec,
                        const VolumeTable& volumes);

CaseloadCounts count_caseloads(std::span<const PatientRecord> records);

}  // namespace volcurve
