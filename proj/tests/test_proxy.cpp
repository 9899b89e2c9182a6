#include "doctest.h"

#include <random>

#include "volcurve/error.hpp"
#include "volcurve/proxy.hpp"

using namespace volcurve;

namespace {

VolumeTable series(const std::string& provider, int first_year, std::initializer_list<double> vs) {
  VolumeTable t;
  int y = first_year;
  for (double v : vs) t.add(provider, y++, v);
  return t;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("cumulative average skips zero years") {
  const VolumeTable t = series("P1", -2, {10, 0, 20});
  CHECK(cumulative_average(t, "P1", 0) == 15.0);
  CHECK(cumulative_average(t, "P1", -1) == 10.0);
  CHECK(cumulative_average(t, "P1", -2) == 10.0);
  CHECK(series("P", 0, {40}).history("P").size() == 1);
  CHECK(cumulative_average(series("P", 0, {40}), "P", 0) == 40.0);
}

TEST_CASE("cumulative average ignores future years") {
  VolumeTable t = series("P", 0, {10, 20});
  CHECK(cumulative_average(t, "P", 0) == 10.0);
  CHECK(simple_average(t, "P") == 15.0);
}

TEST_CASE("causality under changes to later years") {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> vol(0, 200);
  for (int trial = 0; trial < 50; ++trial) {
    VolumeTable a, b;
    for (int y = 0; y < 6; ++y) {
      const int v = y == 0 ? 1 + vol(rng) : vol(rng);
      a.add("P", y, v);
      b.add("P", y, y <= 2 ? v : vol(rng));
    }
    CHECK(cumulative_average(a, "P", 2) == cumulative_average(b, "P", 2));
  }
}

TEST_CASE("average stays within the observed range") {
  const VolumeTable t = series("P", 2010, {104, 0, 131, 148, 119, 0});
  for (int y = 2010; y <= 2015; ++y) {
    const double v = cumulative_average(t, "P", y);
    CHECK(v >= 104.0);
    CHECK(v <= 148.0);
  }
}

TEST_CASE("history errors") {
  const VolumeTable t = series("P", 0, {0, 0, 5});
  CHECK(code_of([&] { cumulative_average(t, "P", 1); }) == ErrorCode::no_volume_history);
  CHECK(code_of([&] { cumulative_average(t, "Q", 1); }) == ErrorCode::unknown_provider);
  CHECK(code_of([&] { simple_average(series("Z", 0, {0, 0}), "Z"); }) == ErrorCode::no_volume_history);
}

TEST_CASE("table rejects bad entries") {
  VolumeTable t;
  t.add("P", 2014, 3);
  CHECK(code_of([&] { t.add("P", 2014, 4); }) == ErrorCode::duplicate_key);
  CHECK(code_of([&] { t.add("P", 2015, -1); }) == ErrorCode::invalid_argument);
  t.add("Q", 2011, 0);
  CHECK(t.history_start() == 2011);
  CHECK(t.last_year() == 2014);
}

TEST_CASE("simple average") {
  CHECK(simple_average(series("P", 0, {10, 0, 20, 30}), "P") == 20.0);
}

TEST_CASE("provider volume by mode") {
  const VolumeTable t = series("P1", 2012, {10, 0, 20, 30});
  CaseloadCounts counts{{{"P1", 2014}, 7}};
  CHECK(provider_volume(t, VolumeMode::caseload, "P1", 2014, counts) == 7.0);
  CHECK(provider_volume(t, VolumeMode::simple_average, "P1", 2014, counts) == 20.0);
  CHECK(provider_volume(t, VolumeMode::cumulative_average, "P1", 2014, counts) == 15.0);
  CHECK(code_of([&] { provider_volume(t, VolumeMode::caseload, "P1", 2013, counts); }) ==
        ErrorCode::unknown_provider);
}

TEST_CASE("volume variability") {
  VolumeTable t;
  t.add("A", 0, 104);
  t.add("A", 1, 148);
  t.add("B", 0, 50);
  t.add("B", 1, 50);
  t.add("B", 2, 0);
  t.add("C", 0, 0);
  t.add("D", 3, 12);
  const auto s = volume_variability(t);
  REQUIRE(s.size() == 3);
  CHECK(s[0].provider == "A");
  CHECK(s[0].mean == 126.0);
  CHECK(s[0].sd == doctest::Approx(31.1127).epsilon(1e-5));
  CHECK(s[1].sd == 0.0);
  CHECK(s[1].n_years == 2);
  CHECK(s[2].provider == "D");
  CHECK(s[2].single_year);
  CHECK(s[2].sd == 0.0);
}
