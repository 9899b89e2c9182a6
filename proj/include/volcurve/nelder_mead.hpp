#pragma once

#include <functional>
#include <vector>

namespace volcurve {

struct NelderMeadOptions {
  double lower = -15.0;
  double upper = 15.0;
  double initial_step = 1.0;
  double f_tolerance = 1e-7;  // on the spread of simplex values
  double x_tolerance = 1e-4;  // on the simplex diameter
  int max_evaluations = 400;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimises f over the box [lower, upper]^d. Trial points are projected
/// onto the box. Non-finite function values count as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace volcurve
