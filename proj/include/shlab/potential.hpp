#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace shlab {

enum class PotentialKind { prototype_quartic, even_polynomial };

// Double-well potential W, stored as an even polynomial W(s) = sum_k coeffs[k] * s^(2k).
// c_w is the declared quadratic-growth constant (W(s) >= c_w*(s-1)^2 for s >= 0) and
// w2_at_1 the value W''(1); both are validated, not derived.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::prototype_quartic;
  std::vector<double> coeffs;
  double c_w = 0.0;
  double w2_at_1 = 0.0;

  // W(s) = (s^2-1)^2/4 with c_w = 1/4 and W''(1) = 2.
  static PotentialSpec prototype();
  static PotentialSpec even_polynomial(std::vector<double> coeffs, double c_w);
};

// Evaluates W (order 0), W' (order 1), or W'' (order 2) at s.
// Throws std::invalid_argument for other orders.
double eval_potential(const PotentialSpec& spec, double s, int order);

// Extended-precision variant; the interval minimizer accumulates in long double because
// its residual evaluation cancels fourth differences of order-one data.
long double eval_potential_ld(const PotentialSpec& spec, long double s, int order);

struct HypothesisCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // worst-case margin on the sample grid; sign convention per check
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  bool all_pass = false;
};

// Samples s in [0, s_max] (n_samples points, plus the mirrored points for the symmetry
// check) and reports pass/fail with worst-case margins for: evenness, positivity away
// from the wells, the well conditions W(1) = W'(1) = 0, and quadratic growth with c_w.
ValidationReport validate_hypotheses(const PotentialSpec& spec, int n_samples, double s_max);

// Decay rate gamma, oscillation frequency delta, and the four characteristic roots
// +-gamma +- i*delta of 2r^4 + 2q r^2 + W''(1) = 0.
struct LinearizationConstants {
  double gamma = 0.0;
  double delta = 0.0;
  double q = 0.0;
  std::array<std::complex<double>, 4> roots{};
};

// Closed-form gamma = (1/2)sqrt(sqrt(2 W''(1)) - q), delta = (1/2)sqrt(sqrt(2 W''(1)) + q),
// reconciled against the roots of the characteristic quartic solved numerically (quadratic
// in r^2, then complex square roots). Throws std::domain_error when |q| >= sqrt(2 W''(1)).
LinearizationConstants linearization(const PotentialSpec& spec, double q);

struct SternbergReport {
  int order_checked = 0;
  bool condition_holds = false;
  double spectral_spread_plus = 0.0;
  double spectral_spread_minus = 0.0;
  int q_smoothness = 0;
};

// Verifies the strong non-resonance condition at the hyperbolic fixed point: for every
// eigenvalue lambda and every multi-index m with |m| = order, lambda - sum_i m_i r_i is
// nonzero and has nonzero real part. Also reports the spectral spreads rho+- and the
// largest K with M + N = order, M - K*rho+ >= 0, N - K*rho- >= 0.
// Only order = 2 is supported; other orders throw std::invalid_argument.
SternbergReport sternberg_check(const LinearizationConstants& consts, int order);

}  // namespace shlab
