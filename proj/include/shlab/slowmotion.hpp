#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shlab/energy.hpp"
#include "shlab/field.hpp"
#include "shlab/fitting.hpp"
#include "shlab/flow.hpp"
#include "shlab/potential.hpp"
#include "shlab/profiles.hpp"

namespace shlab {

// A piecewise ±1 function on the torus: sorted jump locations in [0,1) with
// alternating arc signs, leading_sign on the arc before the first jump.
struct JumpFunction {
  std::vector<double> jump_locations;
  int leading_sign = -1;

  int n_jumps() const { return static_cast<int>(jump_locations.size()); }
  // Smallest arc length between consecutive jumps, wrap-around included.
  double min_gap() const;
  // Arc value at x (right-continuous at the jumps); x is reduced mod 1.
  double sign_at(double x) const;
};

// Requires at least two jumps, an even count, strictly increasing locations in
// [0,1), positive gaps, and leading_sign = +-1; throws std::invalid_argument.
void validate_jump_function(const JumpFunction& v);

// Preparation scale h(eps) entering the energy-closeness requirement
// E_eps(u0) - N*m1 <= 1/h(eps).
enum class PreparationScale { exp_d_gamma, power };

struct SlowMotionConfig {
  double delta = 0.05;
  PreparationScale h_of_eps = PreparationScale::exp_d_gamma;
  double power_exponent = 2.0;  // h(eps) = eps^(-k) in the power mode
  double departure_threshold = 0.05;
  std::vector<double> eps_values;
};

// Requires 0 < delta < min(1, d/8) for the jump function's minimal gap d,
// a positive threshold, positive exponent, and nonempty positive eps_values.
void validate_slow_motion_config(const SlowMotionConfig& cfg, const JumpFunction& v);

// Evaluates the configured h(eps); d and gamma feed the exponential mode.
double preparation_h(const SlowMotionConfig& cfg, double d, double gamma, double eps);

struct ComplianceReport {
  double l1_distance = 0.0;   // prepared field to the sampled jump function
  double energy_total = 0.0;  // E_eps of the prepared field
  double gamma_limit = 0.0;   // N * m1
  double energy_excess = 0.0;
  double h_eps = 0.0;
  double delta = 0.0;
  bool l1_pass = false;      // l1_distance <= delta
  bool excess_pass = false;  // energy_excess <= 1/h_eps
  std::vector<double> zeros;
  double max_zero_offset = 0.0;  // torus distance from each jump to its nearest zero
};

// Prepared initial data misses the closeness requirements; the report carries
// the measured quantities.
class ComplianceError : public std::runtime_error {
 public:
  ComplianceError(const std::string& what, ComplianceReport report_);

  ComplianceReport report;
};

struct InitialDataOptions {
  int grid_n = 256;
  double t_prep = 2.0;  // relaxation horizon for the tanh seed; 0 keeps the raw seed
  double tau_prep = 2e-3;
  bool enforce_compliance = true;
};

struct InitialData {
  Field field;
  ComplianceReport report;
};

// The raw tanh smoothing of v: on each arc the product of ramps
// tanh(gamma (x - a)/eps) tanh(gamma (b - x)/eps) carrying the arc sign.
Field tanh_seed_field(const JumpFunction& v, const Grid& grid, double eps, double gamma);

// Smooths each jump of v with a tanh ramp at the linearized decay rate, then
// relaxes for t_prep time units of the semi-implicit flow. The report measures
// both closeness requirements; with enforce_compliance a miss throws
// ComplianceError.
InitialData make_initial_data(const JumpFunction& v, const SlowMotionConfig& cfg,
                              const EnergyParams& p, const PotentialSpec& spec,
                              const ProfileConstants& consts,
                              const InitialDataOptions& options = {});

struct InterfaceTrack {
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  // sorted zero locations per time
  std::vector<int> counts;
  std::vector<double> collision_times;  // times at which the count dropped
  double max_step_displacement = 0.0;   // nearest-neighbor matched, torus metric
};

// Applies zero detection to every snapshot of the trajectory. Collisions are
// events, not errors; snapshots with no sign change contribute empty lists.
InterfaceTrack track_interfaces(const Trajectory& traj, double min_separation);

// First snapshot time with L1 distance from u0 exceeding threshold, if any.
std::optional<double> departure_time(const Trajectory& traj, const Field& u0,
                                     double threshold);

struct TimescaleOptions {
  int grid_n = 256;
  double tau = 2e-3;
  Scheme scheme = Scheme::semi_implicit;
  double t_prep = 2.0;
  double check_interval = 0.5;  // departure checks and count monitoring cadence
  double t_end_initial = 64.0;  // horizon that doubles until departure or cap
  double t_max = 20000.0;       // simulated-time ceiling
  double budget_seconds = 0.0;  // wall-clock cap per run; 0 disables; a binding
                                // cap makes results machine-dependent
  double interface_offset = 0.0;  // displacement of the first jump in the run data;
                                  // departure gates keep the nominal geometry
};

struct TimescaleRow {
  double eps = 0.0;
  double tau = 0.0;
  std::optional<double> departure;
  double t_obs = 0.0;  // delta^2 exp((d - 4 delta) gamma / eps), clipped to the horizon
  double sup_l1_through_t_obs = 0.0;
  double l1_at_departure = 0.0;
  double energy_initial = 0.0;
  double energy_at_departure = 0.0;
  bool interface_count_nonincreasing = true;
  bool budget_hit = false;
  ComplianceReport compliance;
};

struct TimescaleResult {
  FitResult fit;  // log departure time against 1/eps
  std::vector<TimescaleRow> rows;
  double slope_target = 0.0;  // (d - 4 delta) gamma for the nominal jumps
  bool partial = false;       // some run ended without an observed departure
};

// Departure-time sweep over cfg.eps_values: prepares data near v (first jump
// displaced by options.interface_offset), runs the flow with departure checks
// every check_interval, doubles the horizon until departure or a cap, and fits
// log departure time against 1/eps. Rows record both L1 distances (run to its
// initial state, initial state to the jump function) and the compliance flags.
TimescaleResult timescale_experiment(const JumpFunction& v, const SlowMotionConfig& cfg,
                                     double q, const PotentialSpec& spec,
                                     const ProfileConstants& consts,
                                     const TimescaleOptions& options = {});

// Lower-bound slope (d - 4 delta) gamma for the departure-time fit.
double persistence_slope_target(double d, double delta, double gamma);

// Guaranteed-persistence horizon delta^2 exp((d - 4 delta) gamma / eps).
double observation_horizon(double d, double delta, double gamma, double eps);

}  // namespace shlab
