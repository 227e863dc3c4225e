#pragma once

#include <cstdint>

#include "shlab/field.hpp"
#include "shlab/potential.hpp"

namespace shlab {

// The scaling pair (epsilon, q) of the energy and the flow.
struct EnergyParams {
  double epsilon = 0.0;
  double q = 0.0;
};

// Validates epsilon > 0 and q < sqrt(2 W''(1)); throws std::invalid_argument otherwise.
void validate_params(const EnergyParams& p, const PotentialSpec& spec);

struct EnergyBreakdown {
  double total = 0.0;
  double potential_term = 0.0;
  double gradient_term = 0.0;  // signed: carries the -q factor
  double hessian_term = 0.0;
  bool under_resolved = false;  // set when n * epsilon < 8 on the evaluation grid
};

// Quadrature of (1/eps) W(u) - eps q |u'|^2 + eps^3 |u''|^2 with derivatives from the
// field module (spectral on the torus, finite differences on intervals).
EnergyBreakdown energy_eps(const Field& f, const EnergyParams& p, const PotentialSpec& spec);

// Quadrature of W(v) - q (v')^2 + (v'')^2 on an interval grid.
// Throws std::invalid_argument for torus input.
EnergyBreakdown energy_rescaled(const Field& f, double q, const PotentialSpec& spec);

// Returns integral of (W(u) + eps^4 (u'')^2) minus q eps^2 integral of (u')^2;
// a nonnegative value certifies the interpolation inequality for this field.
double interpolation_margin(const Field& f, const EnergyParams& p, const PotentialSpec& spec);

// Measure of the set where dist(u, {+-1}) >= delta or |eps u'| >= delta
// (node count times spacing).
double bad_set_measure(const Field& f, const EnergyParams& p, double delta);

// Deterministic band-limited random field on a torus grid: modes 1..max_mode with
// normally distributed coefficients damped by 1/(1+m^2), plus a uniform offset in
// [-1.2, 1.2]. Used by the interpolation-inequality certification sweep.
Field random_band_limited(const Grid& grid, int max_mode, std::uint64_t seed);

}  // namespace shlab
