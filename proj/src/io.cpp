#include "volcurve/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "volcurve/error.hpp"

namespace volcurve::io {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(const std::string& source, long line, const std::string& what) {
  throw Error(ErrorCode::parse_error, source + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

// Reads lines, skipping blank ones; strips a UTF-8 byte order mark.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (number_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (!trim(line).empty()) return true;
    }
    return false;
  }
  long number() const { return number_; }

 private:
  std::istream& in_;
  long number_ = 0;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return in;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::parse_error, "matrix data has the wrong length");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

std::string kind_name(TermKind kind) {
  switch (kind) {
    case TermKind::intercept: return "intercept";
    case TermKind::year: return "year";
    case TermKind::linear: return "linear";
    case TermKind::smooth: return "smooth";
    case TermKind::provider: return "provider";
  }
  return "linear";
}

TermKind kind_from(const std::string& name) {
  if (name == "intercept") return TermKind::intercept;
  if (name == "year") return TermKind::year;
  if (name == "linear") return TermKind::linear;
  if (name == "smooth") return TermKind::smooth;
  if (name == "provider") return TermKind::provider;
  throw Error(ErrorCode::parse_error, "unknown term kind '" + name + "'");
}

json spline_to_json(const SplineConfig& c) {
  return {{"n_basis", c.n_basis},
          {"degree", c.degree},
          {"penalty_order", c.penalty_order},
          {"knot_rule", c.knot_rule == KnotRule::quantile ? "quantile" : "uniform"}};
}

SplineConfig spline_from_json(const json& j) {
  SplineConfig c;
  c.n_basis = j.value("n_basis", c.n_basis);
  c.degree = j.value("degree", c.degree);
  c.penalty_order = j.value("penalty_order", c.penalty_order);
  const std::string rule = j.value("knot_rule", std::string("quantile"));
  if (rule == "quantile") {
    c.knot_rule = KnotRule::quantile;
  } else if (rule == "uniform") {
    c.knot_rule = KnotRule::uniform;
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown knot_rule '" + rule + "'");
  }
  c.validate();
  return c;
}

std::string csv_safe(std::string s) {
  for (auto& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<PatientRecord> parse_patients(std::istream& in, const std::string& source) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) parse_fail(source, 1, "empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "provider_id" || header[1] != "year" || header[2] != "outcome") {
    parse_fail(source, reader.number(), "header must start with provider_id,year,outcome");
  }
  std::vector<PatientRecord> records;
  while (reader.next(line)) {
    const auto fields = split_csv(line);
    const long ln = reader.number();
    if (fields.size() != header.size()) {
      parse_fail(source, ln, "expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
    }
    PatientRecord r;
    r.provider_id = fields[0];
    if (r.provider_id.empty()) parse_fail(source, ln, "empty provider_id");
    if (!parse_number(fields[1], r.year)) parse_fail(source, ln, "invalid year '" + fields[1] + "'");
    if (fields[2] == "0") {
      r.outcome = 0;
    } else if (fields[2] == "1") {
      r.outcome = 1;
    } else {
      parse_fail(source, ln, "outcome must be 0 or 1, got '" + fields[2] + "'");
    }
    for (std::size_t c = 3; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        throw Error(ErrorCode::missing_covariate,
                    source + ":" + std::to_string(ln) + ": missing covariate '" + header[c] +
                        "' for record " + std::to_string(records.size() + 1) + " (provider " +
                        r.provider_id + ")");
      }
      double v = 0.0;
      if (!parse_number(fields[c], v)) {
        parse_fail(source, ln, "invalid value '" + fields[c] + "' for covariate '" + header[c] + "'");
      }
      r.covariates.emplace(header[c], v);
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) parse_fail(source, reader.number(), "no patient rows");
  return records;
}

std::vector<PatientRecord> ingest_patients(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_patients(in, path.string());
}

VolumeTable parse_volumes(std::istream& in, const std::string& source) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) parse_fail(source, 1, "empty file");
  const auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "provider_id" || header[1] != "year" || header[2] != "volume") {
    parse_fail(source, reader.number(), "header must be provider_id,year,volume");
  }
  VolumeTable table;
  while (reader.next(line)) {
    const auto fields = split_csv(line);
    const long ln = reader.number();
    if (fields.size() != 3) parse_fail(source, ln, "expected 3 fields, got " + std::to_string(fields.size()));
    int year = 0;
    long volume = 0;
    if (!parse_number(fields[1], year)) parse_fail(source, ln, "invalid year '" + fields[1] + "'");
    if (!parse_number(fields[2], volume)) {
      parse_fail(source, ln, "volume must be a non-negative integer, got '" + fields[2] + "'");
    }
    try {
      table.add(fields[0], year, static_cast<double>(volume));
    } catch (const Error& e) {
      throw Error(e.code(), source + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  if (table.empty()) parse_fail(source, reader.number(), "no volume rows");
  return table;
}

VolumeTable ingest_volumes(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_volumes(in, path.string());
}

void write_patients(std::ostream& out, const std::vector<PatientRecord>& records) {
  std::vector<std::string> names;
  if (!records.empty()) {
    for (const auto& [name, value] : records.front().covariates) names.push_back(name);
  }
  out << "provider_id,year,outcome";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& r : records) {
    out << r.provider_id << ',' << r.year << ',' << r.outcome;
    for (const auto& n : names) out << ',' << format_double(r.covariates.at(n));
    out << '\n';
  }
}

void write_volumes(std::ostream& out, const VolumeTable& table) {
  out << "provider_id,year,volume\n";
  for (const auto& [provider, years] : table.entries()) {
    for (const auto& [year, v] : years) out << provider << ',' << year << ',' << format_double(v) << '\n';
  }
}

VolumeMode parse_volume_mode(const std::string& name) {
  if (name == "caseload") return VolumeMode::caseload;
  if (name == "simple" || name == "simple_average") return VolumeMode::simple_average;
  if (name == "cumulative" || name == "cumulative_average") return VolumeMode::cumulative_average;
  throw Error(ErrorCode::invalid_argument, "unknown volume mode '" + name + "'");
}

std::string volume_mode_name(VolumeMode mode) {
  switch (mode) {
    case VolumeMode::caseload: return "caseload";
    case VolumeMode::simple_average: return "simple";
    case VolumeMode::cumulative_average: return "cumulative";
  }
  return "caseload";
}

json spec_to_json(const ModelSpec& spec) {
  json smooths = json::array();
  for (const auto& s : spec.smooth_terms) {
    json entry = spline_to_json(s.config);
    entry["covariate"] = s.covariate;
    smooths.push_back(entry);
  }
  return {{"linear_terms", spec.linear_terms},
          {"smooth_terms", smooths},
          {"year_intercepts", spec.year_intercepts},
          {"random_intercept", spec.random_intercept},
          {"volume_mode", volume_mode_name(spec.volume_mode)}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  try {
    spec.linear_terms = j.value("linear_terms", std::vector<std::string>{});
    for (const auto& s : j.value("smooth_terms", json::array())) {
      spec.smooth_terms.push_back({s.at("covariate").get<std::string>(), spline_from_json(s)});
    }
    spec.year_intercepts = j.value("year_intercepts", false);
    spec.random_intercept = j.value("random_intercept", true);
    spec.volume_mode = parse_volume_mode(j.value("volume_mode", std::string("caseload")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("model spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json sim_config_to_json(const SimConfig& c) {
  return {{"I", c.I},         {"mu_n", c.mu_n},   {"tau", c.tau},
          {"pi1", c.pi1},     {"beta0", c.beta0}, {"beta1", c.beta1},
          {"beta2", c.beta2}, {"shape", std::string(to_string(c.shape))}};
}

SimConfig sim_config_from_json(const json& j, bool beta0_literal) {
  SimConfig c;
  try {
    c.I = j.value("I", c.I);
    c.mu_n = j.value("mu_n", c.mu_n);
    c.tau = j.value("tau", c.tau);
    c.pi1 = j.value("pi1", c.pi1);
    c.beta0 = beta0_literal ? SimConfig::literal_beta0() : j.value("beta0", c.beta0);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.shape = parse_shape(j.value("shape", std::string("ushape")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<SimConfig> study_configs_from_json(const json& j, bool beta0_literal) {
  auto as_list = [&](const char* key) {
    if (!j.contains(key)) return std::vector<json>{json()};
    const json& v = j.at(key);
    return v.is_array() ? v.get<std::vector<json>>() : std::vector<json>{v};
  };
  std::vector<SimConfig> out;
  for (const json& shape : as_list("shape")) {
    for (const json& tau : as_list("tau")) {
      for (const json& providers : as_list("I")) {
        json single = j;
        if (!shape.is_null()) single["shape"] = shape;
        if (!tau.is_null()) single["tau"] = tau;
        if (!providers.is_null()) single["I"] = providers;
        out.push_back(sim_config_from_json(single, beta0_literal));
      }
    }
  }
  return out;
}

json fitted_to_json(const FittedModel& f) {
  const auto& L = f.layout;
  json index_map = json::array();
  for (const auto& t : L.index_map) {
    index_map.push_back({{"name", t.name}, {"kind", kind_name(t.kind)}, {"offset", t.offset}, {"size", t.size}});
  }
  json smooths = json::array();
  for (const auto& s : L.smooths) {
    json values = json::array();
    for (const auto& [v, c] : s.training_values) values.push_back({v, c});
    smooths.push_back({{"covariate", s.covariate},
                       {"config", spline_to_json(s.basis.config)},
                       {"knots", s.basis.knots.knots},
                       {"degree", s.basis.knots.degree},
                       {"collapsed", s.basis.knots.collapsed},
                       {"centering", matrix_to_json(s.basis.centering)},
                       {"penalty", matrix_to_json(s.basis.penalty)},
                       {"penalty_rank", s.basis.penalty_rank},
                       {"offset", s.offset},
                       {"training_values", values}});
  }
  json penalties = json::array();
  for (const auto& p : L.penalties) {
    penalties.push_back({{"name", p.name}, {"offset", p.offset}, {"size", p.size},
                         {"scale", p.scale}, {"rank", p.rank}, {"provider", p.provider}});
  }
  const auto n = f.covariance.rows();
  std::vector<double> lower;
  lower.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) lower.push_back(f.covariance(r, c));
  }
  return {{"format", "volcurve-fit"},
          {"version", 1},
          {"spec", spec_to_json(L.spec)},
          {"index_map", index_map},
          {"years", L.years},
          {"provider_ids", L.provider_ids},
          {"smooths", smooths},
          {"penalties", penalties},
          {"n_dense", L.n_dense},
          {"n_cols", L.n_cols},
          {"theta", std::vector<double>(f.theta().begin(), f.theta().end())},
          {"covariance", {{"dim", n}, {"lower", lower}}},
          {"log_lambdas", f.log_lambdas},
          {"laml", f.laml},
          {"has_tau", f.has_tau},
          {"tau_hat", f.tau_hat},
          {"tau_at_boundary", f.tau_at_boundary},
          {"eta_star", f.eta_star},
          {"n_obs", f.n_obs},
          {"edf", f.fit.edf},
          {"edf_total", f.fit.edf_total},
          {"deviance", f.fit.deviance},
          {"penalty", f.fit.penalty},
          {"converged", f.fit.converged},
          {"iterations", f.fit.iterations},
          {"evaluations", f.evaluations}};
}

FittedModel fitted_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "volcurve-fit") {
      throw Error(ErrorCode::parse_error, "not a volcurve fit file");
    }
    FittedModel f;
    auto& L = f.layout;
    L.spec = spec_from_json(j.at("spec"));
    for (const auto& t : j.at("index_map")) {
      L.index_map.push_back({t.at("name").get<std::string>(), kind_from(t.at("kind").get<std::string>()),
                             t.at("offset").get<int>(), t.at("size").get<int>()});
    }
    L.years = j.at("years").get<std::vector<int>>();
    L.provider_ids = j.at("provider_ids").get<std::vector<std::string>>();
    for (const auto& s : j.at("smooths")) {
      SmoothTerm term;
      term.covariate = s.at("covariate").get<std::string>();
      term.basis.config = spline_from_json(s.at("config"));
      term.basis.knots.knots = s.at("knots").get<std::vector<double>>();
      term.basis.knots.degree = s.at("degree").get<int>();
      term.basis.knots.collapsed = s.at("collapsed").get<int>();
      term.basis.centering = matrix_from_json(s.at("centering"));
      term.basis.penalty = matrix_from_json(s.at("penalty"));
      term.basis.penalty_rank = s.at("penalty_rank").get<int>();
      term.offset = s.at("offset").get<int>();
      for (const auto& vc : s.at("training_values")) {
        term.training_values.emplace_back(vc.at(0).get<double>(), vc.at(1).get<double>());
      }
      L.smooths.push_back(std::move(term));
    }
    for (const auto& p : j.at("penalties")) {
      PenaltyBlock pb;
      pb.name = p.at("name").get<std::string>();
      pb.offset = p.at("offset").get<int>();
      pb.size = p.at("size").get<int>();
      pb.scale = p.at("scale").get<double>();
      pb.rank = p.at("rank").get<int>();
      pb.provider = p.at("provider").get<bool>();
      if (!pb.provider) {
        for (const auto& s : L.smooths) {
          if (s.offset == pb.offset) pb.matrix = pb.scale * s.basis.penalty;
        }
      }
      L.penalties.push_back(std::move(pb));
    }
    L.n_dense = j.at("n_dense").get<int>();
    L.n_cols = j.at("n_cols").get<int>();

    const auto theta = j.at("theta").get<std::vector<double>>();
    f.fit.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    const auto n = j.at("covariance").at("dim").get<Eigen::Index>();
    const auto lower = j.at("covariance").at("lower").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(lower.size()) != n * (n + 1) / 2 || n != f.fit.theta.size()) {
      throw Error(ErrorCode::parse_error, "covariance has the wrong size");
    }
    f.covariance.resize(n, n);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        f.covariance(r, c) = lower[k];
        f.covariance(c, r) = lower[k];
        ++k;
      }
    }
    f.log_lambdas = j.at("log_lambdas").get<std::vector<double>>();
    f.laml = j.at("laml").get<double>();
    f.has_tau = j.at("has_tau").get<bool>();
    f.tau_hat = j.at("tau_hat").get<double>();
    f.tau_at_boundary = j.at("tau_at_boundary").get<bool>();
    f.eta_star = j.at("eta_star").get<double>();
    f.n_obs = j.at("n_obs").get<long>();
    f.fit.edf = j.at("edf").get<std::vector<double>>();
    f.fit.edf_total = j.at("edf_total").get<double>();
    f.fit.deviance = j.at("deviance").get<double>();
    f.fit.penalty = j.at("penalty").get<double>();
    f.fit.converged = j.at("converged").get<bool>();
    f.fit.iterations = j.at("iterations").get<int>();
    f.evaluations = j.value("evaluations", 0);
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("fit file: ") + e.what());
  }
}

json to_json(const OREstimate& e) {
  return {{"v1", e.v1}, {"v2", e.v2}, {"or_hat", e.or_hat}, {"se_g", e.se_g},
          {"ci_lower", e.ci_lower}, {"ci_upper", e.ci_upper}};
}

json to_json(const MOREstimate& e) {
  auto interval = [](const Interval& i) {
    return json::array({std::isfinite(i.lower) ? json(i.lower) : json(),
                        std::isfinite(i.upper) ? json(i.upper) : json()});
  };
  return {{"mor_hat", e.mor_hat}, {"ci", interval(e.ci)}, {"tau_hat", e.tau_hat},
          {"tau_ci", interval(e.tau_ci)}, {"tau_wald_ci", interval(e.tau_wald_ci)},
          {"boundary", e.boundary}};
}

json to_json(const TestResult& t) {
  return {{"kind", t.kind == TestKind::smooth_wald ? "smooth_wald" : "variance_boundary_lrt"},
          {"statistic", t.statistic},
          {"reference_df", t.reference_df},
          {"p_value", t.p_value}};
}

void write_curve_csv(std::ostream& out, const CurveEstimate& c) {
  out << "# alpha=" << format_double(c.alpha) << " n_draws=" << c.n_draws << " seed=" << c.seed
      << " critical_value=" << format_double(c.critical_value) << '\n';
  out << "v,f_hat,se,band_lo,band_hi,plus_tau,minus_tau\n";
  for (std::size_t r = 0; r < c.grid.size(); ++r) {
    out << format_double(c.grid[r]) << ',' << format_double(c.f_hat[r]) << ',' << format_double(c.se[r])
        << ',' << format_double(c.band_lower[r]) << ',' << format_double(c.band_upper[r]) << ','
        << format_double(c.f_hat[r] + c.tau_hat) << ',' << format_double(c.f_hat[r] - c.tau_hat) << '\n';
  }
}

void write_probability_csv(std::ostream& out, const ProbabilityCurve& c) {
  out << "# eta_star=" << format_double(c.eta_star) << '\n';
  out << "v,pi_star,band_lo,band_hi,plus_tau,minus_tau\n";
  for (std::size_t r = 0; r < c.grid.size(); ++r) {
    out << format_double(c.grid[r]) << ',' << format_double(c.pi_star[r]) << ','
        << format_double(c.band_lower[r]) << ',' << format_double(c.band_upper[r]) << ','
        << format_double(c.plus_tau[r]) << ',' << format_double(c.minus_tau[r]) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const SmoothTerm& term) {
  out << "v,count\n";
  for (const auto& [v, count] : term.training_values) {
    out << format_double(v) << ',' << format_double(count) << '\n';
  }
}

void write_study_csv(std::ostream& out, const std::vector<StudyResult>& results,
                     const StudyOptions& options, std::uint64_t base_seed) {
  out << "# base_seed=" << base_seed << '\n';
  out << "config_index,replicate,seed,I,mu_n,tau,pi1,beta0,beta1,beta2,shape,status,tau_hat,"
         "tau_boundary,edf_volume,p_smooth,p_tau,or_hat,or_lower,or_upper";
  for (double g : options.curve_grid) out << ",f_" << format_double(g);
  out << '\n';
  for (const auto& r : results) {
    const auto& c = r.config;
    out << r.config_index << ',' << r.replicate << ',' << r.seed << ',' << c.I << ','
        << format_double(c.mu_n) << ',' << format_double(c.tau) << ',' << format_double(c.pi1) << ','
        << format_double(c.beta0) << ',' << format_double(c.beta1) << ',' << format_double(c.beta2)
        << ',' << to_string(c.shape) << ',' << (r.ok ? std::string("ok") : csv_safe(r.error)) << ','
        << format_double(r.tau_hat) << ',' << (r.tau_boundary ? 1 : 0) << ','
        << format_double(r.edf_volume) << ',' << format_double(r.p_smooth) << ','
        << format_double(r.p_tau) << ',' << format_double(r.or_hat) << ','
        << format_double(r.or_lower) << ',' << format_double(r.or_upper);
    for (double v : r.curve) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<StudySummary>& summaries) {
  out << "config_index,I,tau,shape,n_ok,n_failed,tau_q1,tau_median,tau_q3,p_smooth_q1,"
         "p_smooth_median,p_smooth_q3,p_tau_q1,p_tau_median,p_tau_q3,or_q1,or_median,or_q3,"
         "reject_smooth,p_tau_below_1e-9,or_true,or_coverage\n";
  for (const auto& s : summaries) {
    auto q = [](const Quartiles& x) {
      return format_double(x.q1) + ',' + format_double(x.median) + ',' + format_double(x.q3);
    };
    out << s.config_index << ',' << s.config.I << ',' << format_double(s.config.tau) << ','
        << to_string(s.config.shape) << ',' << s.n_ok << ',' << s.n_failed << ',' << q(s.tau_hat)
        << ',' << q(s.p_smooth) << ',' << q(s.p_tau) << ',' << q(s.or_hat) << ','
        << format_double(s.reject_smooth) << ',' << format_double(s.p_tau_below_1e9) << ','
        << format_double(s.or_true) << ',' << format_double(s.or_coverage) << '\n';
  }
}

json read_json(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

}  // namespace volcurve::io
