#include "shlab/fitting.hpp"

#include <cmath>
#include <stdexcept>

namespace shlab {

FitResult fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("fit_linear: xs and ys must have equal length");
  }
  const std::size_t n = xs.size();
  if (n < 3) {
    throw std::invalid_argument("fit_linear: at least 3 points required");
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("fit_linear: abscissas are all equal");
  }
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // Coefficient of determination; a perfectly flat ordinate set fits exactly.
  fit.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.points.emplace_back(xs[i], ys[i]);
  }
  return fit;
}

FitResult fit_loglinear(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("fit_loglinear: xs and ys must have equal length");
  }
  std::vector<double> logys;
  logys.reserve(ys.size());
  for (double y : ys) {
    if (!(y > 0.0)) {
      throw std::invalid_argument("fit_loglinear: ordinates must be positive");
    }
    logys.push_back(std::log(y));
  }
  FitResult fit = fit_linear(xs, logys);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    fit.points[i].second = ys[i];  // report raw ordinates, not their logs
  }
  return fit;
}

}  // namespace shlab
