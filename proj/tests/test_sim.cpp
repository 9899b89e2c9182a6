#include "doctest.h"

#include <cmath>
#include <set>

#include "support.hpp"
#include "volcurve/error.hpp"
#include "volcurve/fit.hpp"
#include "volcurve/sim.hpp"

using namespace volcurve;

TEST_CASE("true volume effects") {
  CHECK(true_volume_effect(Shape::ushape, 100.0) == 0.0);
  CHECK(true_volume_effect(Shape::ushape, 90.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(true_volume_effect(Shape::linear, 100.0) == 0.0);
  CHECK(true_volume_effect(Shape::linear, 90.0) == doctest::Approx(0.3));
  CHECK(true_volume_effect(Shape::none, 37.0) == 0.0);
  CHECK(parse_shape("ushape") == Shape::ushape);
  CHECK(to_string(Shape::linear) == "linear");
  CHECK_THROWS_AS(parse_shape("cubic"), Error);
}

TEST_CASE("intercept readings") {
  CHECK(SimConfig{}.beta0 == doctest::Approx(-2.1972245773));
  CHECK(SimConfig::literal_beta0() == doctest::Approx(0.5249791875));
}

TEST_CASE("config validation") {
  SimConfig c;
  c.I = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.pi1 = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.mu_n = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.tau = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("generated data") {
  SimConfig c;
  const SimData d = generate(c, 42);
  const double n = static_cast<double>(d.records.size());
  CHECK(std::abs(n - 20000.0) <= 3.0 * std::sqrt(20000.0));
  CHECK(d.provider_ids.size() == 200);
  CHECK(std::set<std::string>(d.provider_ids.begin(), d.provider_ids.end()).size() == 200);
  for (int k : d.caseloads) CHECK(k > 0);
  double x1 = 0.0;
  for (const auto& r : d.records) x1 += r.covariates.at("x1");
  c.I = 2000;
  const SimData big = generate(c, 43);
  double big_x1 = 0.0;
  for (const auto& r : big.records) big_x1 += r.covariates.at("x1");
  CHECK(std::abs(big_x1 / big.records.size() - 0.3) < 0.01);

  c = {};
  c.tau = 0.0;
  for (double u : generate(c, 1).provider_effects) CHECK(u == 0.0);
}

TEST_CASE("same seed, same data") {
  SimConfig c;
  c.I = 30;
  const SimData a = generate(c, 7);
  const SimData b = generate(c, 7);
  const SimData other = generate(c, 8);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].outcome == b.records[i].outcome);
    CHECK(a.records[i].covariates == b.records[i].covariates);
  }
  CHECK(a.provider_effects == b.provider_effects);
  CHECK(a.provider_effects != other.provider_effects);
}

TEST_CASE("outcome frequencies match the model probabilities") {
  // Tiny configuration redrawn many times; outcome totals per x1 stratum
  // against their expectation under the stated probabilities.
  SimConfig c;
  c.I = 2;
  c.mu_n = 3.0;
  c.shape = Shape::ushape;
  double obs[2] = {0, 0}, expected[2] = {0, 0}, var[2] = {0, 0};
  for (std::uint64_t seed = 0; seed < 1000000; ++seed) {
    const SimData d = generate(c, seed);
    std::size_t r = 0;
    for (std::size_t i = 0; i < d.caseloads.size(); ++i) {
      const double base = c.beta0 + true_volume_effect(c.shape, d.caseloads[i]) + d.provider_effects[i];
      for (int j = 0; j < d.caseloads[i]; ++j, ++r) {
        const auto& rec = d.records[r];
        const int s = rec.covariates.at("x1") > 0.5;
        const double p =
            testing::logistic(base + c.beta1 * rec.covariates.at("x1") + c.beta2 * rec.covariates.at("x2"));
        obs[s] += rec.outcome;
        expected[s] += p;
        var[s] += p * (1.0 - p);
      }
    }
  }
  for (int s = 0; s < 2; ++s) CHECK(std::abs(obs[s] - expected[s]) < 3.0 * std::sqrt(var[s]));
}

TEST_CASE("coefficients recovered on large null data") {
  SimConfig c;
  c.I = 2000;
  c.mu_n = 500.0;
  c.tau = 0.0;
  c.shape = Shape::none;
  const SimData d = generate(c, 11);
  ModelSpec spec;
  spec.linear_terms = {"x1", "x2"};
  spec.random_intercept = false;
  const FittedModel f = optimize(assemble(d.records, spec, VolumeTable{}));
  CHECK(std::abs(f.theta()(0) - c.beta0) < 0.02);
  CHECK(std::abs(f.theta()(1) - c.beta1) < 0.02);
  CHECK(std::abs(f.theta()(2) - c.beta2) < 0.02);
}

TEST_CASE("multi-year data use cumulative volumes") {
  MultiYearConfig c;
  c.I = 10;
  const MultiYearData d = generate_multi_year(c, 3);
  CHECK(d.volumes.history_start() == c.first_year - c.history_years);
  CHECK(d.volumes.last_year() == c.first_year + c.n_years - 1);
  const auto counts = count_caseloads(d.records);
  for (const auto& [key, n] : counts) {
    CHECK(key.second >= c.first_year);
    CHECK(d.volumes.history(key.first).at(key.second) == n);
  }
  CHECK(d.provider_effects.size() == 10);
  c.year_effects.resize(2);
  CHECK_THROWS_AS(generate_multi_year(c, 3), Error);
}

TEST_CASE("replicate seeds") {
  SimConfig a;
  SimConfig b;
  b.I = 500;
  CHECK(replicate_seed(1, a, 0) == replicate_seed(1, a, 0));
  CHECK(replicate_seed(1, a, 0) != replicate_seed(1, a, 1));
  CHECK(replicate_seed(1, a, 0) != replicate_seed(2, a, 0));
  CHECK(replicate_seed(1, a, 0) != replicate_seed(1, b, 0));
}

TEST_CASE("study results do not depend on thread count") {
  SimConfig a;
  a.I = 20;
  SimConfig b = a;
  b.shape = Shape::linear;
  const std::vector<SimConfig> configs{a, b};
  const auto one = run_study(configs, 3, 5, 1);
  const auto three = run_study(configs, 3, 5, 3);
  REQUIRE(one.size() == 6);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].config_index == static_cast<int>(i / 3));
    CHECK(one[i].replicate == static_cast<int>(i % 3));
    CHECK(one[i].seed == three[i].seed);
    CHECK(one[i].ok == three[i].ok);
    CHECK(one[i].tau_hat == three[i].tau_hat);
    CHECK(one[i].p_smooth == three[i].p_smooth);
    CHECK(one[i].curve.size() == three[i].curve.size());
  }
  CHECK_THROWS_AS(run_study(configs, 0, 5, 1), Error);
}

TEST_CASE("replicate fields") {
  SimConfig c;
  c.I = 100;
  const StudyResult r = run_replicate(c, 17);
  REQUIRE(r.ok);
  CHECK(r.p_smooth >= 0.0);
  CHECK(r.p_smooth <= 1.0);
  CHECK(r.p_tau >= 0.0);
  CHECK(r.p_tau <= 1.0);
  CHECK(r.or_hat > 0.0);
  CHECK(r.or_lower <= r.or_hat);
  CHECK(r.or_hat <= r.or_upper);
  CHECK(r.tau_hat > 0.2);
  CHECK(r.curve.size() == 9);
  CHECK(r.edf_volume >= 1.0);
}

TEST_CASE("quartiles and summaries") {
  const Quartiles q = quartiles({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(q.q1 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.q3 == 4.0);
  CHECK(std::isnan(quartiles({}).median));

  StudyResult r;
  r.ok = true;
  r.tau_hat = 0.5;
  r.p_smooth = 0.01;
  r.p_tau = 1e-12;
  r.or_hat = 1.1;
  r.or_lower = 1.0;
  r.or_upper = 1.2;
  StudyResult failed;
  failed.error = "boom";
  std::vector<StudyResult> results{r, r, r, failed};
  const auto s = summarize(results);
  REQUIRE(s.size() == 1);
  CHECK(s[0].n_ok == 3);
  CHECK(s[0].n_failed == 1);
  CHECK(s[0].tau_hat.q3 - s[0].tau_hat.q1 == 0.0);
  CHECK(s[0].reject_smooth == 1.0);
  CHECK(s[0].p_tau_below_1e9 == 1.0);
  CHECK(s[0].or_true == doctest::Approx(std::exp(0.1)));
  CHECK(s[0].or_coverage == 1.0);
}
