#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "shlab/energy.hpp"
#include "shlab/field.hpp"
#include "shlab/fitting.hpp"
#include "shlab/interval_solver.hpp"
#include "shlab/potential.hpp"

namespace shlab {

// Transition-energy constants: m1 for the full line, m_plus / m_minus for the two
// half-line problems pinned to zero at the origin. By the symmetry of W these satisfy
// m_plus = m_minus = m1/2.
struct ProfileConstants {
  double m1 = 0.0;
  double m_plus = 0.0;
  double m_minus = 0.0;
  double q = 0.0;
  double truncation_L = 0.0;
  int grid_n = 0;
  double truncation_gap = 0.0;  // |m1 at L - m1 at 2L|, the domain-truncation check
};

// Clamped end data about a well: (value offset, slope) at each end, in stretched
// coordinates z = x/epsilon.
struct BoundaryData {
  std::array<double, 2> alpha{0.0, 0.0};
  std::array<double, 2> beta{0.0, 0.0};
  int well = -1;  // +1 or -1
};

enum class IntervalConstraint { zero_dirichlet, clamped };

struct ProfileReport {
  bool converged = false;
  int iterations = 0;
  double el_residual_sup = 0.0;  // sup of |2 eps^4 w'''' + 2 q eps^2 w'' + W'(w)| at free nodes
  double residual_floor = 0.0;
  double end_curvature_left = 0.0;   // stretched |w''| at a free end, NaN when clamped
  double end_curvature_right = 0.0;
  double energy = 0.0;  // interval energy; equal in the physical and stretched scalings
  long double energy_ld = 0.0L;
  int branch_sign = +1;  // zero-dirichlet: sign of the selected interior branch
};

struct MinimizerResult {
  Field minimizer;
  ProfileReport report;
};

struct NonConvergenceError : std::runtime_error {
  double el_residual_sup;
  double tol;
  int iterations;
  NonConvergenceError(const std::string& msg, double resid, double tol_, int iters)
      : std::runtime_error(msg), el_residual_sup(resid), tol(tol_), iterations(iters) {}
};

struct ResolutionError : std::runtime_error {
  double truncation_gap;
  ResolutionError(const std::string& msg, double gap)
      : std::runtime_error(msg), truncation_gap(gap) {}
};

struct DegenerateFrequencyError : std::domain_error {
  using std::domain_error::domain_error;
};

// Minimizes the interval energy over the physical grid. zero_dirichlet pins both end
// values to 0 and leaves slopes free (natural second-derivative conditions emerge);
// it seeds a tanh-like ramp, solves both sign branches, and keeps the lower energy.
// clamped pins values and slopes to well + bdata offsets. A provided init overrides
// the seed (and skips the branch comparison). Throws NonConvergenceError when the
// descent stalls above tolerance.
MinimizerResult minimize_interval(const Grid& grid, IntervalConstraint constraint,
                                  const std::optional<BoundaryData>& bdata,
                                  const EnergyParams& p, const PotentialSpec& spec,
                                  const std::optional<Field>& init = {});

// Transition energies on [-L, L] (clamped to the wells with zero slope) with an
// h-extrapolated value, a domain-doubling truncation study, and the half-line values.
// Requires L >= 20, n >= 4096, n even. Throws ResolutionError when the truncation
// study disagrees above 1e-6.
ProfileConstants estimate_m1(double q, const PotentialSpec& spec, double L, int n);

// The explicit decaying comparison profile
//   eta(x) = s + (mid_value - s) e^(-gamma x) cos(delta x)
//          + ((mid_slope + gamma (mid_value - s))/delta) e^(-gamma x) sin(delta x)
// sampled on an interval grid starting at 0; eta(0) = mid_value, eta'(0) = mid_slope.
// Throws DegenerateFrequencyError when |delta| < 1e-12 in consts.
Field construct_eta(double mid_value, double mid_slope, int s_k,
                    const LinearizationConstants& consts, const Grid& grid);

struct MidpointSample {
  double d_over_eps = 0.0;
  double eps = 0.0;
  double distance = 0.0;  // dist of the midpoint value from {+-1}
  double deriv1 = 0.0, deriv2 = 0.0, deriv3 = 0.0;  // |w'|, |w''|, |w'''| there, stretched
  bool excluded = false;  // distance below 1e-13: underflow regime
};

struct MidpointDecayResult {
  FitResult fit;  // log(distance) against d/eps; slope expected near -gamma/2
  std::vector<MidpointSample> rows;
};

// Zero-dirichlet minimizers on (0, 1/2) at eps = (1/2)/(d/eps) for each requested
// ratio; fits the log midpoint distance. Requires >= 4 ratios spanning a factor >= 2.
MidpointDecayResult midpoint_decay_experiment(const std::vector<double>& d_over_eps,
                                              const EnergyParams& p_template,
                                              const PotentialSpec& spec);

struct EtaDecaySample {
  double d_over_eps = 0.0;
  double eps = 0.0;
  double mid_value = 0.0;
  double mid_slope = 0.0;
  double tail_energy = 0.0;  // stretched energy of eta on [0, 40]
};

struct EtaDecayResult {
  FitResult fit;  // log(tail energy) against d/eps; slope expected near -gamma
  std::vector<EtaDecaySample> rows;
};

// Builds eta from each minimizer's midpoint data and fits the decay of its energy.
EtaDecayResult eta_decay_experiment(const std::vector<double>& d_over_eps,
                                    const EnergyParams& p_template, const PotentialSpec& spec);

struct GluedEnergySample {
  double eps = 0.0;
  double energy = 0.0;            // sum of per-gap minimizer energies
  double defect = 0.0;            // n_zeros * m1_matched - energy
  double min_gap_over_eps = 0.0;  // smallest stretched gap, the fit abscissa
  double sum_exp = 0.0;           // sum over gaps of exp(-gamma * gap/eps)
  bool saturated = false;         // defect <= 0: bound already met, excluded from fit
};

struct LowerBoundResult {
  FitResult fit;  // log(defect) against min gap/eps; slope expected near -gamma
  std::vector<GluedEnergySample> rows;
  double m1_matched = 0.0;   // transition energy at the same grid spacing as the gaps
  double envelope_c = 0.0;   // max over fitted rows of defect / sum_exp
  double intercept_c = 0.0;  // exp of the fitted intercept
  int n_zeros = 0;
};

// Glues per-gap zero-dirichlet minimizers for a torus zero layout and measures the
// energy defect against n_zeros * m1. All energies use one matched grid spacing
// (1/1024 in stretched units) so that defects at the 1e-15 scale are meaningful.
// Gaps must be at least min_zero_spacing apart.
LowerBoundResult lower_bound_experiment(const std::vector<double>& zero_layout,
                                        const std::vector<double>& eps_values,
                                        const EnergyParams& p_template,
                                        const PotentialSpec& spec,
                                        const LinearizationConstants& consts,
                                        double min_zero_spacing = 0.1);

// Max deviation ||v - well||_inf of clamped minimizers against the boundary offset
// size: offsets (delta, 0) at both ends about well -1, stretched length 30. The fit
// confirms the linear response to small boundary data. All deltas must be <= delta0.
FitResult clamped_deviation_sweep(const std::vector<double>& deltas, double q,
                                  const PotentialSpec& spec, double delta0 = 0.05);

struct BadSetSample {
  double eps = 0.0;
  double measure = 0.0;
};

struct BadSetSweepResult {
  FitResult fit;  // measure against eps; linear with r^2 near 1
  std::vector<BadSetSample> rows;
  double c1 = 0.0;  // max over rows of measure / eps
};

// Zero-dirichlet minimizers on (0, 1); measures the set where the field is delta-far
// from the wells or has |eps u'| >= delta, and fits its linear growth in eps.
BadSetSweepResult bad_set_sweep(const std::vector<double>& eps_values, double delta, double q,
                                const PotentialSpec& spec);

}  // namespace shlab
