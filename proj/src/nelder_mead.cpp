#include "volcurve/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace volcurve {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& opt) {
  const std::size_t d = start.size();
  NelderMeadResult result;
  auto project = [&](std::vector<double>& x) {
    for (auto& v : x) v = std::clamp(v, opt.lower, opt.upper);
  };
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  project(start);
  std::vector<std::vector<double>> simplex(d + 1, start);
  for (std::size_t k = 0; k < d; ++k) {
    // Step inward when the start sits on the upper bound.
    const double step = start[k] + opt.initial_step > opt.upper ? -opt.initial_step : opt.initial_step;
    simplex[k + 1][k] += step;
    project(simplex[k + 1]);
  }
  std::vector<double> values(d + 1);
  for (std::size_t k = 0; k <= d; ++k) values[k] = eval(simplex[k]);

  std::vector<std::size_t> order(d + 1);
  while (result.evaluations < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const auto best = order.front();
    const auto worst = order.back();
    const auto second = order[d > 0 ? d - 1 : 0];

    double diameter = 0.0;
    for (std::size_t k = 0; k <= d; ++k) {
      for (std::size_t j = 0; j < d; ++j) {
        diameter = std::max(diameter, std::abs(simplex[k][j] - simplex[best][j]));
      }
    }
    const double spread = values[worst] - values[best];
    if ((std::isfinite(spread) && spread <= opt.f_tolerance) || diameter <= opt.x_tolerance) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(d, 0.0);
    for (std::size_t k = 0; k <= d; ++k) {
      if (k == worst) continue;
      for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[k][j] / static_cast<double>(d);
    }
    auto along = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
      project(x);
      return x;
    };

    auto reflected = along(-1.0);
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      auto expanded = along(-2.0);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = std::move(expanded);
        values[worst] = f_expanded;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[worst] = std::move(reflected);
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    auto contracted = along(outside ? -0.5 : 0.5);
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = std::move(contracted);
      values[worst] = f_contracted;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t k = 0; k <= d; ++k) {
      if (k == best) continue;
      for (std::size_t j = 0; j < d; ++j) {
        simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
      }
      values[k] = eval(simplex[k]);
    }
  }

  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

}  // namespace volcurve
