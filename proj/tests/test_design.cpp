#include "doctest.h"

#include "support.hpp"
#include "volcurve/design.hpp"
#include "volcurve/error.hpp"

using namespace volcurve;

namespace {

ModelSpec volume_spec() {
  ModelSpec spec;
  spec.linear_terms = {"x1", "x2"};
  spec.smooth_terms = {{"volume", SplineConfig{}}};
  return spec;
}

}  // namespace

TEST_CASE("column layout") {
  const auto records = testing::small_records(1);
  const AssembledModel m = assemble(records, volume_spec(), VolumeTable{});
  const auto& L = m.layout;
  REQUIRE(L.index_map.size() == 5);
  CHECK(L.index_map[0].name == "(Intercept)");
  CHECK(L.term("x1").offset == 1);
  CHECK(L.term("x2").offset == 2);
  CHECK(L.term("s(volume)").offset == 3);
  CHECK(L.term("s(volume)").size == 9);
  CHECK(L.term("provider").offset == 12);
  CHECK(L.term("provider").size == 12);
  CHECK(L.n_dense == 12);
  CHECK(L.n_cols == 24);
  CHECK(m.dense.rows() == static_cast<Eigen::Index>(records.size()));
  CHECK(L.penalties.size() == 2);
  CHECK(L.penalties[1].provider);
  CHECK(L.penalties[0].scale > 0.0);
  CHECK(L.volume_smooth_index() == 0);
  CHECK_THROWS_AS(L.term("nope"), Error);
}

TEST_CASE("caseload volume is the provider record count") {
  const auto records = testing::small_records(2);
  const AssembledModel m = assemble(records, volume_spec(), VolumeTable{});
  const auto counts = count_caseloads(records);
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(m.volumes[i] == counts.at({records[i].provider_id, records[i].year}));
  }
}

TEST_CASE("materialized rows equal design rows") {
  const auto records = testing::small_records(3);
  const AssembledModel m = assemble(records, volume_spec(), VolumeTable{});
  const Eigen::MatrixXd X = m.materialize();
  for (std::size_t i = 0; i < records.size(); i += 17) {
    const Eigen::RowVectorXd row = m.layout.design_row(records[i].covariates, m.volumes[i],
                                                       records[i].provider_id, records[i].year);
    CHECK(row == X.row(static_cast<Eigen::Index>(i)));
    CHECK(row.segment(m.layout.n_dense, m.n_providers()).sum() == 1.0);
  }
  const Eigen::RowVectorXd avg =
      m.layout.design_row(records[0].covariates, m.volumes[0], kAverageProvider, 0);
  CHECK(avg.segment(m.layout.n_dense, m.n_providers()).sum() == 0.0);
  CHECK_THROWS_AS(m.layout.design_row(records[0].covariates, m.volumes[0], "nobody", 0), Error);
}

TEST_CASE("smooth columns are centered over the training data") {
  const AssembledModel m = assemble(testing::small_records(4), volume_spec(), VolumeTable{});
  const auto& t = m.layout.smooths[0];
  CHECK(m.dense.middleCols(t.offset, t.basis.size()).colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
  double n = 0.0;
  for (const auto& [v, c] : t.training_values) n += c;
  CHECK(n == m.n_obs());
}

TEST_CASE("missing covariate names record and covariate") {
  auto records = testing::small_records(5);
  records[7].covariates.erase("x2");
  try {
    assemble(records, volume_spec(), VolumeTable{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_covariate);
    CHECK(std::string(e.what()).find("'x2'") != std::string::npos);
    CHECK(std::string(e.what()).find("record 8") != std::string::npos);
  }
}

TEST_CASE("year intercepts and cumulative volume") {
  std::vector<PatientRecord> records;
  VolumeTable vt;
  for (int p = 0; p < 6; ++p) {
    const std::string id = "P" + std::to_string(p);
    vt.add(id, 2012, 10 + p);
    vt.add(id, 2013, p % 2 ? 0 : 30 + p);
    vt.add(id, 2014, 20 + 3 * p);
    for (int year : {2013, 2014}) {
      for (int j = 0; j < 5; ++j) records.push_back({id, year, j % 2, {{"x1", double(j)}}});
    }
  }
  ModelSpec spec;
  spec.linear_terms = {"x1"};
  SplineConfig small;
  small.n_basis = 5;
  spec.smooth_terms = {{"volume", small}};
  spec.year_intercepts = true;
  spec.volume_mode = VolumeMode::cumulative_average;
  const AssembledModel m = assemble(records, spec, vt);
  CHECK(m.layout.years == std::vector<int>{2013, 2014});
  CHECK(m.layout.index_map[0].kind == TermKind::year);
  CHECK(m.layout.index_map[0].size == 2);
  CHECK(m.dense.leftCols(2).rowwise().sum().isOnes());
  // P1 in 2014: (11 + 0 + 23) / 2
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].provider_id == "P1" && records[i].year == 2014) CHECK(m.volumes[i] == 17.0);
    if (records[i].provider_id == "P0" && records[i].year == 2013) CHECK(m.volumes[i] == 20.0);
  }
  CHECK_THROWS_AS(m.layout.design_row({{"x1", 0.0}}, 20.0, "P0", 2016), Error);

  spec.volume_mode = VolumeMode::simple_average;
  const AssembledModel s = assemble(records, spec, vt);
  CHECK(s.volumes[0] == 20.0);
}

TEST_CASE("year intercepts need two years") {
  ModelSpec spec = volume_spec();
  spec.year_intercepts = true;
  CHECK_THROWS_AS(assemble(testing::small_records(6), spec, VolumeTable{}), Error);
}

TEST_CASE("spec validation") {
  ModelSpec spec = volume_spec();
  spec.linear_terms.push_back("x1");
  CHECK_THROWS_AS(spec.validate(), Error);
  spec = volume_spec();
  spec.linear_terms.push_back("volume");
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK(volume_spec().uses_volume());
}

TEST_CASE("dropping the random intercept") {
  const AssembledModel m = assemble(testing::small_records(7), volume_spec(), VolumeTable{});
  const AssembledModel r = m.without_random_intercept();
  CHECK_FALSE(r.layout.has_provider_block());
  CHECK(r.layout.n_cols == m.layout.n_dense);
  CHECK(r.layout.penalties.size() == 1);
  CHECK(r.dense == m.dense);
}
