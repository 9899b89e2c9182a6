#include "doctest.h"

#include <cmath>
#include <limits>

#include "volcurve/nelder_mead.hpp"

using namespace volcurve;

TEST_CASE("quadratic bowl") {
  auto f = [](const std::vector<double>& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 4.0 * (x[1] + 2.0) * (x[1] + 2.0);
  };
  NelderMeadOptions opts;
  opts.x_tolerance = 1e-8;
  opts.f_tolerance = 1e-14;
  const auto r = nelder_mead(f, {5.0, 5.0}, opts);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-5));
}

TEST_CASE("rosenbrock") {
  auto f = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  NelderMeadOptions opts;
  opts.x_tolerance = 1e-9;
  opts.f_tolerance = 1e-16;
  opts.max_evaluations = 4000;
  const auto r = nelder_mead(f, {-1.2, 1.0}, opts);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("minimum on the box boundary") {
  auto f = [](const std::vector<double>& x) { return -x[0]; };
  NelderMeadOptions opts;
  opts.lower = -3.0;
  opts.upper = 3.0;
  const auto r = nelder_mead(f, {0.0}, opts);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(r.x[0] <= 3.0);
}

TEST_CASE("non-finite values are avoided") {
  auto f = [](const std::vector<double>& x) {
    return x[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 0.5) * (x[0] - 0.5);
  };
  const auto r = nelder_mead(f, {0.1});
  CHECK(std::isfinite(r.value));
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("evaluation budget") {
  int calls = 0;
  auto f = [&](const std::vector<double>& x) {
    ++calls;
    return std::sin(x[0]) + std::cos(3.0 * x[1]);
  };
  NelderMeadOptions opts;
  opts.max_evaluations = 25;
  opts.x_tolerance = 0.0;
  opts.f_tolerance = 0.0;
  const auto r = nelder_mead(f, {0.3, 0.2}, opts);
  CHECK(r.evaluations <= 25);
  CHECK(calls == r.evaluations);
  CHECK_FALSE(r.converged);
}
