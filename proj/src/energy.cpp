#include "shlab/energy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/core.h>

namespace shlab {

namespace {

// Trapezoid weights on intervals, uniform mean-weights on the torus.
double quadrature(const Grid& grid, const std::vector<double>& density) {
  Field f{grid, density};
  return integrate(f);
}

}  // namespace

void validate_params(const EnergyParams& p, const PotentialSpec& spec) {
  if (!(p.epsilon > 0.0)) {
    throw std::invalid_argument("EnergyParams: epsilon must be positive");
  }
  const double bound = std::sqrt(2.0 * spec.w2_at_1);
  if (!(p.q < bound)) {
    throw std::invalid_argument(
        fmt::format("EnergyParams: q = {} must be below sqrt(2 W''(1)) = {}", p.q, bound));
  }
}

EnergyBreakdown energy_eps(const Field& f, const EnergyParams& p, const PotentialSpec& spec) {
  validate_params(p, spec);
  const Field d1 = derivative(f, 1);
  const Field d2 = derivative(f, 2);
  const int n = f.grid.n;
  std::vector<double> w_density(n), g_density(n), h_density(n);
  for (int i = 0; i < n; ++i) {
    w_density[i] = eval_potential(spec, f.samples[i], 0) / p.epsilon;
    g_density[i] = -p.epsilon * p.q * d1.samples[i] * d1.samples[i];
    h_density[i] = p.epsilon * p.epsilon * p.epsilon * d2.samples[i] * d2.samples[i];
  }
  EnergyBreakdown out;
  out.potential_term = quadrature(f.grid, w_density);
  out.gradient_term = quadrature(f.grid, g_density);
  out.hessian_term = quadrature(f.grid, h_density);
  out.total = out.potential_term + out.gradient_term + out.hessian_term;
  out.under_resolved = f.grid.n * p.epsilon < 8.0;
  return out;
}

EnergyBreakdown energy_rescaled(const Field& f, double q, const PotentialSpec& spec) {
  if (f.grid.topology == Topology::torus) {
    throw std::invalid_argument("energy_rescaled: requires an interval grid");
  }
  const Field d1 = derivative(f, 1);
  const Field d2 = derivative(f, 2);
  const int n = f.grid.n;
  std::vector<double> w_density(n), g_density(n), h_density(n);
  for (int i = 0; i < n; ++i) {
    w_density[i] = eval_potential(spec, f.samples[i], 0);
    g_density[i] = -q * d1.samples[i] * d1.samples[i];
    h_density[i] = d2.samples[i] * d2.samples[i];
  }
  EnergyBreakdown out;
  out.potential_term = quadrature(f.grid, w_density);
  out.gradient_term = quadrature(f.grid, g_density);
  out.hessian_term = quadrature(f.grid, h_density);
  out.total = out.potential_term + out.gradient_term + out.hessian_term;
  return out;
}

double interpolation_margin(const Field& f, const EnergyParams& p, const PotentialSpec& spec) {
  const Field d1 = derivative(f, 1);
  const Field d2 = derivative(f, 2);
  const int n = f.grid.n;
  const double e2 = p.epsilon * p.epsilon;
  std::vector<double> density(n);
  for (int i = 0; i < n; ++i) {
    density[i] = eval_potential(spec, f.samples[i], 0) +
                 e2 * e2 * d2.samples[i] * d2.samples[i] -
                 p.q * e2 * d1.samples[i] * d1.samples[i];
  }
  return quadrature(f.grid, density);
}

double bad_set_measure(const Field& f, const EnergyParams& p, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("bad_set_measure: delta must lie in (0,1)");
  }
  const Field d1 = derivative(f, 1);
  const double h = f.grid.spacing();
  double measure = 0.0;
  for (int i = 0; i < f.grid.n; ++i) {
    const double dist = std::min(std::abs(f.samples[i] - 1.0), std::abs(f.samples[i] + 1.0));
    if (dist >= delta || std::abs(p.epsilon * d1.samples[i]) >= delta) {
      measure += h;
    }
  }
  return measure;
}

Field random_band_limited(const Grid& grid, int max_mode, std::uint64_t seed) {
  if (grid.topology != Topology::torus) {
    throw std::invalid_argument("random_band_limited: requires a torus grid");
  }
  if (max_mode < 1 || max_mode > grid.n / 4) {
    throw std::invalid_argument("random_band_limited: max_mode must lie in [1, n/4]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coeff(0.0, 1.0);
  std::uniform_real_distribution<double> offset_dist(-1.2, 1.2);

  std::vector<double> a(max_mode + 1), b(max_mode + 1);
  for (int m = 1; m <= max_mode; ++m) {
    const double damp = 1.0 / (1.0 + m * m);
    a[m] = coeff(rng) * damp;
    b[m] = coeff(rng) * damp;
  }
  const double offset = offset_dist(rng);

  Field out{grid, std::vector<double>(grid.n)};
  for (int i = 0; i < grid.n; ++i) {
    const double x = static_cast<double>(i) / grid.n;
    double v = offset;
    for (int m = 1; m <= max_mode; ++m) {
      v += a[m] * std::cos(2.0 * std::numbers::pi * m * x) +
           b[m] * std::sin(2.0 * std::numbers::pi * m * x);
    }
    out.samples[i] = v;
  }
  return out;
}

}  // namespace shlab
