#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shlab/energy.hpp"
#include "shlab/field.hpp"
#include "shlab/potential.hpp"

namespace shlab {

// Time discretizations of u_t = -W'(u) - 2 eps^2 q u'' - 2 eps^4 u'''' on the
// unit torus: the proximal (minimizing-movements) scheme and a spectral scheme
// with the full linear part implicit and W' explicit.
enum class Scheme { minimizing_movements, semi_implicit };

std::string scheme_name(Scheme scheme);

// Accepts "mm", "minimizing-movements", "si", "semi-implicit";
// throws std::invalid_argument otherwise.
Scheme parse_scheme(const std::string& name);

struct FlowConfig {
  double tau = 1e-3;
  Scheme scheme = Scheme::semi_implicit;
  double inner_tol = 1e-10;  // target for sqrt(mean(gJ^2)) in the movement subproblem
  int inner_max_iters = 500;
  double t_end = 1.0;
};

// Requires 0 < tau <= 0.1 (empirical stability ceiling for both schemes),
// inner_tol > 0, inner_max_iters >= 1, t_end >= tau; throws std::invalid_argument.
void validate_flow_config(const FlowConfig& cfg);

struct FlowState {
  double time = 0.0;
  Field field;
  std::vector<std::pair<double, EnergyBreakdown>> energy_history;
  // Running sum of tau * mean(((u_n - u_{n-1}) / tau)^2) / epsilon.
  double dissipation_accum = 0.0;
};

FlowState make_flow_state(Field initial);

// The movement subproblem ran out of iterations, or a descent trial could not
// reduce the objective. Carries the last inner iterate for inspection.
class StepFailureError : public std::runtime_error {
 public:
  StepFailureError(const std::string& what, double time_, int iterations_,
                   double gradient_norm_, Field last_iterate_);

  double time;
  int iterations;
  double gradient_norm;
  Field last_iterate;
};

// A spectral denominator of the semi-implicit update is within 1e-12 of zero;
// remedy: a smaller time step.
class StepSizeError : public std::runtime_error {
 public:
  StepSizeError(const std::string& what, double time_, int mode_, double denominator_);

  double time;
  int mode;
  double denominator;
};

// One step of uhat <- (uhat - tau FT[W'(u)]) / (1 - tau (2 eps^2 q k^2 - 2 eps^4 k^4))
// over angular wavenumbers k = 2 pi m. Advances time, field, and
// dissipation_accum in place.
void step_semi_implicit(FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
                        const PotentialSpec& spec);

// One proximal step: preconditioned descent on
//   J(v) = E_eps(v) + mean((v - u)^2) / (2 eps tau),
// warm-started at u, stopped when sqrt(mean(gJ^2)) <= inner_tol. Descent trials
// use non-strict backtracking on J, so J never increases across the step.
void step_minimizing_movements(FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
                               const PotentialSpec& spec);

// Dispatches on cfg.scheme.
void step(FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
          const PotentialSpec& spec);

struct Observer {
  int stride = 1;
  std::function<void(const FlowState&)> callback;
};

struct EvolveOptions {
  int record_stride = 1;    // scalar series sampling; first and last step always recorded
  int snapshot_stride = 0;  // 0 keeps no snapshots
  std::vector<Observer> observers;
};

struct Trajectory {
  FlowConfig config;
  std::vector<double> times;
  std::vector<EnergyBreakdown> energies;
  std::vector<double> mean_u;
  std::vector<double> mean_wprime;  // mean of W'(u) at the recorded times
  std::vector<double> dissipation;  // dissipation_accum at the recorded times
  std::vector<double> snapshot_times;
  std::vector<Field> snapshots;
  double dissipation_accum = 0.0;
  FlowState final_state;
};

// Steps from state.time to cfg.t_end, recording scalar series and snapshots at
// their strides and invoking observers at theirs. Step errors propagate with
// the failing time attached.
Trajectory evolve(FlowState state, const FlowConfig& cfg, const EnergyParams& p,
                  const PotentialSpec& spec, const EvolveOptions& opts = {});

// Max over snapshot times of |mean u(t) - mean u(0) + sum tau * mean W'(u_s)|,
// the sum running over left endpoints of the steps before t. Requires
// snapshots at every step; throws std::invalid_argument otherwise.
double mass_identity_residual(const Trajectory& traj, const EnergyParams& p,
                              const PotentialSpec& spec);

}  // namespace shlab
