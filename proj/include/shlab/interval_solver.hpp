#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "shlab/potential.hpp"

namespace shlab {

// One end of the finite-difference minimization problem: the value is always pinned;
// a present slope pins the first derivative as well (the second derivative is then
// free), an absent slope leaves the natural condition to emerge from the energy.
struct EndCondition {
  double value = 0.0;
  std::optional<double> slope;
};

// Minimization of the stretched-coordinate energy
//   E_h(w) = h [ sum_i theta_i W(w_i) - q sum_edges d1_i^2 + sum_interior d2_i^2 ]
// over nodes w_0..w_n on [0, length] with h = length/cells, trapezoid weights theta,
// forward first differences d1 and centered second differences d2.
struct IntervalProblem {
  PotentialSpec potential;
  double q = 0.0;
  double length = 0.0;
  int cells = 0;
  EndCondition left, right;
};

struct SolveOptions {
  double tol = 1e-9;   // target for the sup-norm of the first-variation density
  int max_iters = 200;
};

struct SolveReport {
  std::vector<double> samples;  // cells+1 nodes
  bool converged = false;
  int iterations = 0;
  // Sup over free nodes of |dE_h/dw_i| / h, the discrete Euler-Lagrange residual density.
  double el_residual_sup = 0.0;
  // Roundoff floor of that evaluation: the fourth-difference part of the gradient
  // cancels terms of size ~1/h^3, so the density cannot be trusted below ~eps/h^4.
  double residual_floor = 0.0;
  double energy = 0.0;
  long double energy_ld = 0.0L;
  // One-sided |w''| at ends whose slope is free (NaN at clamped ends); the natural
  // boundary condition makes these vanish as the grid refines.
  double end_curvature_left = std::numeric_limits<double>::quiet_NaN();
  double end_curvature_right = std::numeric_limits<double>::quiet_NaN();
};

// Damped Newton minimization of E_h. Slope constraints are eliminated exactly (the
// boundary-adjacent node becomes an affine function of its neighbor), the pentadiagonal
// Hessian is factored by a long double LDL^T, and steps are accepted on energy decrease
// or on residual decrease. Stops at max(opts.tol, residual_floor); converged = false
// when the iteration budget or the damping cap is exhausted first.
// init must be empty (linear ramp between end values) or have cells+1 entries.
SolveReport solve_interval(const IntervalProblem& prob, const std::vector<double>& init = {},
                           const SolveOptions& opts = {});

// The discrete energy E_h of given samples with spacing h, accumulated in long double.
// Shared by the solver and by glued-field energy accounting, where two evaluations must
// use bit-identical stencils for their difference to be meaningful.
long double interval_energy_ld(const PotentialSpec& spec, double q, long double h,
                               const std::vector<double>& samples);

}  // namespace shlab
