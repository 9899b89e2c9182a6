#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "volcurve/design.hpp"
#include "volcurve/fit.hpp"
#include "volcurve/inference.hpp"
#include "volcurve/proxy.hpp"
#include "volcurve/sim.hpp"

namespace volcurve::io {

/// CSV with header `provider_id,year,outcome,<covariates...>`. Errors carry
/// the 1-based line number.
std::vector<PatientRecord> ingest_patients(const std::filesystem::path& path);
std::vector<PatientRecord> parse_patients(std::istream& in, const std::string& source = "<input>");

/// CSV with header `provider_id,year,volume`.
VolumeTable ingest_volumes(const std::filesystem::path& path);
VolumeTable parse_volumes(std::istream& in, const std::string& source = "<input>");

void write_patients(std::ostream& out, const std::vector<PatientRecord>& records);
void write_volumes(std::ostream& out, const VolumeTable& table);

// Shortest decimal that round-trips; "nan"/"inf" for non-finite values.
std::string format_double(double value);

VolumeMode parse_volume_mode(const std::string& name);
std::string volume_mode_name(VolumeMode mode);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

nlohmann::json sim_config_to_json(const SimConfig& config);
// Single config; `I`, `tau` and `shape` may be arrays, which expand to the
// Cartesian product in study_configs_from_json.
SimConfig sim_config_from_json(const nlohmann::json& j, bool beta0_literal = false);
std::vector<SimConfig> study_configs_from_json(const nlohmann::json& j, bool beta0_literal = false);

/// Everything needed to reload a fit for prediction and inference.
nlohmann::json fitted_to_json(const FittedModel& fitted);
FittedModel fitted_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OREstimate& est);
nlohmann::json to_json(const MOREstimate& est);
nlohmann::json to_json(const TestResult& test);

void write_curve_csv(std::ostream& out, const CurveEstimate& curve);
void write_probability_csv(std::ostream& out, const ProbabilityCurve& curve);
void write_histogram_csv(std::ostream& out, const SmoothTerm& term);

void write_study_csv(std::ostream& out, const std::vector<StudyResult>& results,
                     const StudyOptions& options, std::uint64_t base_seed);
void write_summary_csv(std::ostream& out, const std::vector<StudySummary>& summaries);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace volcurve::io
