#pragma once

#include <string>
#include <utility>
#include <vector>

namespace shlab {

// Least-squares line fit record for exponential-law verification; intercepts house the
// fitted constants of the decay laws.
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (abscissa, ordinate) actually fitted
  std::string note;                               // exclusions and caveats
};

// y = slope*x + intercept by least squares; requires at least 3 points.
FitResult fit_linear(const std::vector<double>& xs, const std::vector<double>& ys);

// fit_linear on (x, log y); requires ys > 0.
FitResult fit_loglinear(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace shlab
