#include "volcurve/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "volcurve/error.hpp"

namespace volcurve {

namespace {

std::string smooth_name(const std::string& covariate) { return "s(" + covariate + ")"; }

double covariate_value(const PatientRecord& record, std::size_t index, const std::string& name,
                       double volume) {
  if (name == kVolumeCovariate) return volume;
  auto it = record.covariates.find(name);
  if (it == record.covariates.end() || !std::isfinite(it->second)) {
    throw Error(ErrorCode::missing_covariate, "missing covariate '" + name + "' for record " +
                                                  std::to_string(index + 1) + " (provider " +
                                                  record.provider_id + ")");
  }
  return it->second;
}

}  // namespace

void ModelSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& name : linear_terms) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::invalid_argument, "term '" + name + "' declared twice");
    }
  }
  for (const auto& smooth : smooth_terms) {
    if (!seen.insert(smooth.covariate).second) {
      throw Error(ErrorCode::invalid_argument, "term '" + smooth.covariate + "' declared twice");
    }
    smooth.config.validate();
  }
}

bool ModelSpec::uses_volume() const {
  auto is_volume = [](const std::string& n) { return n == kVolumeCovariate; };
  return std::any_of(linear_terms.begin(), linear_terms.end(), is_volume) ||
         std::any_of(smooth_terms.begin(), smooth_terms.end(),
                     [&](const SmoothSpec& s) { return is_volume(s.covariate); });
}

const TermRange& ModelLayout::term(std::string_view name) const {
  for (const auto& t : index_map) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::invalid_argument, "no model term named '" + std::string(name) + "'");
}

const SmoothTerm& ModelLayout::smooth(std::string_view covariate) const {
  for (const auto& s : smooths) {
    if (s.covariate == covariate) return s;
  }
  throw Error(ErrorCode::invalid_argument, "no smooth term for '" + std::string(covariate) + "'");
}

int ModelLayout::volume_smooth_index() const {
  for (std::size_t k = 0; k < smooths.size(); ++k) {
    if (smooths[k].is_volume()) return static_cast<int>(k);
  }
  return -1;
}

int ModelLayout::provider_column(std::string_view provider) const {
  auto it = std::lower_bound(provider_ids.begin(), provider_ids.end(), provider);
  if (it == provider_ids.end() || *it != provider) {
    throw Error(ErrorCode::unknown_provider, "unknown provider '" + std::string(provider) + "'");
  }
  return static_cast<int>(it - provider_ids.begin());
}

Eigen::RowVectorXd ModelLayout::design_row(const Covariates& covariates, double volume,
                                           std::string_view provider, int year,
                                           bool clamp_volume) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n_cols);
  PatientRecord record{std::string(provider), year, 0, covariates};
  for (const auto& t : index_map) {
    switch (t.kind) {
      case TermKind::intercept:
        row(t.offset) = 1.0;
        break;
      case TermKind::year: {
        auto it = std::lower_bound(years.begin(), years.end(), year);
        if (it == years.end() || *it != year) {
          throw Error(ErrorCode::invalid_argument,
                      "year " + std::to_string(year) + " has no intercept in this model");
        }
        row(t.offset + static_cast<int>(it - years.begin())) = 1.0;
        break;
      }
      case TermKind::linear:
        row(t.offset) = covariate_value(record, 0, t.name, volume);
        break;
      case TermKind::smooth:
        break;
      case TermKind::provider:
        if (!provider.empty() && provider != kAverageProvider) {
          row(t.offset + provider_column(provider)) = 1.0;
        }
        break;
    }
  }
  for (const auto& s : smooths) {
    const double x = covariate_value(record, 0, s.covariate, volume);
    s.basis.evaluate_row(x, clamp_volume && s.is_volume(), row.segment(s.offset, s.basis.size()));
  }
  return row;
}

CaseloadCounts count_caseloads(std::span<const PatientRecord> records) {
  CaseloadCounts counts;
  for (const auto& r : records) ++counts[{r.provider_id, r.year}];
  return counts;
}

AssembledModel assemble(std::span<const PatientRecord> records, const ModelSpec& spec,
                        const VolumeTable& volume_table) {
  spec.validate();
  if (records.empty()) {
    throw Error(ErrorCode::invalid_argument, "no patient records");
  }
  const auto n = records.size();

  AssembledModel model;
  ModelLayout& layout = model.layout;
  layout.spec = spec;

  model.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = records[i].outcome;
    if (y != 0 && y != 1) {
      throw Error(ErrorCode::invalid_argument,
                  "outcome of record " + std::to_string(i + 1) + " is not 0/1");
    }
    model.y(static_cast<Eigen::Index>(i)) = y;
  }

  // Volume per record.
  model.volumes.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (spec.uses_volume()) {
    const CaseloadCounts caseloads =
        spec.volume_mode == VolumeMode::caseload ? count_caseloads(records) : CaseloadCounts{};
    std::map<std::pair<std::string, int>, double> cache;
    for (std::size_t i = 0; i < n; ++i) {
      const auto key = std::make_pair(records[i].provider_id, records[i].year);
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache.emplace(key, provider_volume(volume_table, spec.volume_mode, key.first,
                                                key.second, caseloads))
                 .first;
      }
      model.volumes[i] = it->second;
    }
  }

  // Columns.
  int col = 0;
  if (spec.year_intercepts) {
    std::set<int> years;
    for (const auto& r : records) years.insert(r.year);
    if (years.size() < 2) {
      throw Error(ErrorCode::invalid_argument, "year intercepts need records from at least two years");
    }
    layout.years.assign(years.begin(), years.end());
    layout.index_map.push_back({"year", TermKind::year, col, static_cast<int>(years.size())});
    col += static_cast<int>(years.size());
  } else {
    layout.index_map.push_back({"(Intercept)", TermKind::intercept, col, 1});
    col += 1;
  }
  for (const auto& name : spec.linear_terms) {
    layout.index_map.push_back({name, TermKind::linear, col, 1});
    col += 1;
  }

  std::vector<std::vector<double>> smooth_values;
  for (const auto& s : spec.smooth_terms) {
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = covariate_value(records[i], i, s.covariate, model.volumes[i]);
    }
    SmoothTerm term;
    term.covariate = s.covariate;
    term.basis = SmoothBasis::build(values, s.config);
    term.offset = col;
    std::map<double, double> counts;
    for (double v : values) counts[v] += 1.0;
    term.training_values.assign(counts.begin(), counts.end());
    layout.index_map.push_back({smooth_name(s.covariate), TermKind::smooth, col, term.basis.size()});
    col += term.basis.size();
    layout.smooths.push_back(std::move(term));
    smooth_values.push_back(std::move(values));
  }
  layout.n_dense = col;

  if (spec.random_intercept) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.provider_id);
    layout.provider_ids.assign(ids.begin(), ids.end());
    const int n_prov = static_cast<int>(ids.size());
    layout.index_map.push_back({"provider", TermKind::provider, col, n_prov});
    col += n_prov;
  }
  layout.n_cols = col;

  // Dense block.
  model.dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), layout.n_dense);
  for (const auto& t : layout.index_map) {
    if (t.kind == TermKind::intercept) {
      model.dense.col(t.offset).setOnes();
    } else if (t.kind == TermKind::year) {
      for (std::size_t i = 0; i < n; ++i) {
        auto it = std::lower_bound(layout.years.begin(), layout.years.end(), records[i].year);
        model.dense(static_cast<Eigen::Index>(i), t.offset + (it - layout.years.begin())) = 1.0;
      }
    } else if (t.kind == TermKind::linear) {
      for (std::size_t i = 0; i < n; ++i) {
        model.dense(static_cast<Eigen::Index>(i), t.offset) =
            covariate_value(records[i], i, t.name, model.volumes[i]);
      }
    }
  }
  Eigen::RowVectorXd row;
  for (std::size_t k = 0; k < layout.smooths.size(); ++k) {
    const auto& term = layout.smooths[k];
    row.resize(term.basis.size());
    for (std::size_t i = 0; i < n; ++i) {
      term.basis.evaluate_row(smooth_values[k][i], false, row);
      model.dense.block(static_cast<Eigen::Index>(i), term.offset, 1, term.basis.size()) = row;
    }
  }

  if (spec.random_intercept) {
    model.provider_column.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      model.provider_column[i] = layout.provider_column(records[i].provider_id);
    }
  }

  // Penalties. Smooth penalties are rescaled to the magnitude of their block
  // of X^T X so that log smoothing parameters live on a comparable scale.
  for (const auto& term : layout.smooths) {
    const auto block = model.dense.middleCols(term.offset, term.basis.size());
    const double xtx_norm = (block.transpose() * block).norm();
    const double s_norm = term.basis.penalty.norm();
    PenaltyBlock pb;
    pb.name = smooth_name(term.covariate);
    pb.offset = term.offset;
    pb.size = term.basis.size();
    pb.scale = s_norm > 0.0 ? xtx_norm / s_norm : 1.0;
    pb.matrix = pb.scale * term.basis.penalty;
    pb.rank = term.basis.penalty_rank;
    layout.penalties.push_back(std::move(pb));
  }
  if (spec.random_intercept) {
    PenaltyBlock pb;
    pb.name = "provider";
    pb.offset = layout.n_dense;
    pb.size = model.n_providers();
    pb.rank = pb.size;
    pb.provider = true;
    layout.penalties.push_back(std::move(pb));
  }
  return model;
}

Eigen::MatrixXd AssembledModel::materialize() const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_obs(), layout.n_cols);
  x.leftCols(layout.n_dense) = dense;
  for (std::size_t i = 0; i < provider_column.size(); ++i) {
    x(static_cast<Eigen::Index>(i), layout.n_dense + provider_column[i]) = 1.0;
  }
  return x;
}

AssembledModel AssembledModel::without_random_intercept() const {
  AssembledModel reduced = *this;
  auto& layout_r = reduced.layout;
  layout_r.spec.random_intercept = false;
  std::erase_if(layout_r.index_map, [](const TermRange& t) { return t.kind == TermKind::provider; });
  std::erase_if(layout_r.penalties, [](const PenaltyBlock& p) { return p.provider; });
  layout_r.provider_ids.clear();
  layout_r.n_cols = layout_r.n_dense;
  reduced.provider_column.clear();
  return reduced;
}

}  // namespace volcurve
