#include "shlab/flow.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>

#include <fmt/core.h>

#include "spectral_internal.hpp"

namespace shlab {

namespace {

constexpr double kTauCeiling = 0.1;

void require_torus_field(const Field& f) {
  if (f.grid.topology != Topology::torus) {
    throw std::invalid_argument("flow: the field must live on the torus");
  }
  if (static_cast<int>(f.samples.size()) != f.grid.n) {
    throw std::invalid_argument("flow: sample count does not match the grid");
  }
}

void require_step_basics(const FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
                         const PotentialSpec& spec) {
  require_torus_field(state.field);
  validate_params(p, spec);
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) {
    throw std::invalid_argument("flow: tau must be positive and finite");
  }
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) {
    sum += x;
  }
  return sum / static_cast<double>(v.size());
}

double mean_wprime_of(const std::vector<double>& v, const PotentialSpec& spec) {
  double sum = 0.0;
  for (double x : v) {
    sum += eval_potential(spec, x, 1);
  }
  return sum / static_cast<double>(v.size());
}

void accumulate_dissipation(FlowState& state, const std::vector<double>& next, double tau,
                            double epsilon) {
  const auto& prev = state.field.samples;
  double acc = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double rate = (next[i] - prev[i]) / tau;
    acc += rate * rate;
  }
  acc /= static_cast<double>(prev.size());
  state.dissipation_accum += tau * acc / epsilon;
}

}  // namespace

std::string scheme_name(Scheme scheme) {
  return scheme == Scheme::minimizing_movements ? "mm" : "si";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "mm" || name == "minimizing-movements") {
    return Scheme::minimizing_movements;
  }
  if (name == "si" || name == "semi-implicit") {
    return Scheme::semi_implicit;
  }
  throw std::invalid_argument(fmt::format("unknown scheme '{}' (expected mm or si)", name));
}

void validate_flow_config(const FlowConfig& cfg) {
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) {
    throw std::invalid_argument("flow config: tau must be positive and finite");
  }
  if (cfg.tau > kTauCeiling) {
    throw std::invalid_argument(
        fmt::format("flow config: tau = {:g} exceeds the stability ceiling {:g}", cfg.tau,
                    kTauCeiling));
  }
  if (!(cfg.inner_tol > 0.0)) {
    throw std::invalid_argument("flow config: inner_tol must be positive");
  }
  if (cfg.inner_max_iters < 1) {
    throw std::invalid_argument("flow config: inner_max_iters must be at least 1");
  }
  if (!(cfg.t_end >= cfg.tau)) {
    throw std::invalid_argument("flow config: t_end must be at least tau");
  }
}

FlowState make_flow_state(Field initial) {
  FlowState state;
  state.field = std::move(initial);
  return state;
}

StepFailureError::StepFailureError(const std::string& what, double time_, int iterations_,
                                   double gradient_norm_, Field last_iterate_)
    : std::runtime_error(what),
      time(time_),
      iterations(iterations_),
      gradient_norm(gradient_norm_),
      last_iterate(std::move(last_iterate_)) {}

StepSizeError::StepSizeError(const std::string& what, double time_, int mode_,
                             double denominator_)
    : std::runtime_error(what), time(time_), mode(mode_), denominator(denominator_) {}

void step_semi_implicit(FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
                        const PotentialSpec& spec) {
  require_step_basics(state, cfg, p, spec);
  const int n = state.field.grid.n;
  const double tau = cfg.tau;
  const double e2 = p.epsilon * p.epsilon;
  const double e4 = e2 * e2;
  const auto& u = state.field.samples;

  std::vector<double> wprime(n);
  for (int i = 0; i < n; ++i) {
    wprime[i] = eval_potential(spec, u[i], 1);
  }

  const int n_modes = n / 2 + 1;
  std::vector<std::complex<double>> uh(n_modes);
  std::vector<std::complex<double>> wh(n_modes);
  detail::fft_forward(n, u.data(), uh.data());
  detail::fft_forward(n, wprime.data(), wh.data());

  for (int m = 0; m < n_modes; ++m) {
    const double k = 2.0 * std::numbers::pi * static_cast<double>(m);
    const double k2 = k * k;
    const double symbol = 2.0 * e2 * p.q * k2 - 2.0 * e4 * k2 * k2;
    const double denom = 1.0 - tau * symbol;
    if (std::abs(denom) < 1e-12) {
      throw StepSizeError(
          fmt::format("semi-implicit denominator {:.3e} at mode {} (t = {:.6g}); "
                      "use a smaller tau",
                      denom, m, state.time),
          state.time, m, denom);
    }
    uh[m] = (uh[m] - tau * wh[m]) / denom;
  }

  std::vector<double> next(n);
  detail::fft_backward(n, uh.data(), next.data());

  accumulate_dissipation(state, next, tau, p.epsilon);
  state.field.samples = std::move(next);
  state.time += tau;
}

void step_minimizing_movements(FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
                               const PotentialSpec& spec) {
  require_step_basics(state, cfg, p, spec);
  if (!(cfg.inner_tol > 0.0)) {
    throw std::invalid_argument("flow: inner_tol must be positive");
  }
  if (cfg.inner_max_iters < 1) {
    throw std::invalid_argument("flow: inner_max_iters must be at least 1");
  }

  const int n = state.field.grid.n;
  const double tau = cfg.tau;
  const double eps = p.epsilon;
  const double q = p.q;
  const auto& u = state.field.samples;

  const int n_modes = n / 2 + 1;
  std::vector<double> grad_symbol(n_modes);  // of 2 eps q v'' + 2 eps^3 v''''
  std::vector<double> precond(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    const double k = 2.0 * std::numbers::pi * static_cast<double>(m);
    const double k2 = k * k;
    const double k4 = k2 * k2;
    grad_symbol[m] = 2.0 * eps * eps * eps * k4 - 2.0 * eps * q * k2;
    const double e2 = eps * eps;
    precond[m] = 1.0 / tau + 2.0 * e2 * e2 * k4 - 2.0 * e2 * q * k2 + 2.0;
  }

  // Spectral evaluation of the gradient amplifies roundoff by the symbol size at
  // the top mode plus the 1/(eps tau) penalty scale; gradient norms below that
  // amplification times machine epsilon are noise, so stop there.
  const double k_top = 2.0 * std::numbers::pi * static_cast<double>(n / 2);
  const double noise_amp = 2.0 * eps * eps * eps * k_top * k_top * k_top * k_top +
                           2.0 * eps * std::abs(q) * k_top * k_top + 1.0 / (eps * tau);
  const double stop_tol = std::max(
      cfg.inner_tol, 16.0 * std::numeric_limits<double>::epsilon() * noise_amp);

  auto objective = [&](const Field& v) {
    double penalty = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = v.samples[i] - u[i];
      penalty += d * d;
    }
    penalty /= static_cast<double>(n);
    return energy_eps(v, p, spec).total + penalty / (2.0 * eps * tau);
  };

  Field v = state.field;  // warm start at u
  double objective_cur = objective(v);
  double gradient_norm = 0.0;
  bool converged = false;

  std::vector<std::complex<double>> hat(n_modes);
  std::vector<double> linear_part(n);
  std::vector<double> grad(n);
  std::vector<double> direction(n);
  Field trial = v;

  for (int it = 0; it <= cfg.inner_max_iters; ++it) {
    detail::fft_forward(n, v.samples.data(), hat.data());
    for (int m = 0; m < n_modes; ++m) {
      hat[m] *= grad_symbol[m];
    }
    detail::fft_backward(n, hat.data(), linear_part.data());

    double sq_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      grad[i] = eval_potential(spec, v.samples[i], 1) / eps + linear_part[i] +
                (v.samples[i] - u[i]) / (eps * tau);
      sq_sum += grad[i] * grad[i];
    }
    gradient_norm = std::sqrt(sq_sum / static_cast<double>(n));
    if (gradient_norm <= stop_tol) {
      converged = true;
      break;
    }
    if (it == cfg.inner_max_iters) {
      break;
    }

    for (int i = 0; i < n; ++i) {
      direction[i] = eps * grad[i];
    }
    detail::fft_forward(n, direction.data(), hat.data());
    for (int m = 0; m < n_modes; ++m) {
      hat[m] /= precond[m];
    }
    detail::fft_backward(n, hat.data(), direction.data());

    // Objective evaluations carry spectral roundoff of this size; trials within it
    // are ties, and rejecting them would stall the contraction near the minimum.
    const double objective_slack =
        8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(objective_cur));
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (int i = 0; i < n; ++i) {
        trial.samples[i] = v.samples[i] - alpha * direction[i];
      }
      const double objective_trial = objective(trial);
      if (objective_trial <= objective_cur + objective_slack) {
        v.samples.swap(trial.samples);
        objective_cur = objective_trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      throw StepFailureError(
          fmt::format("movement subproblem at t = {:.6g} could not reduce its objective "
                      "(iteration {}, gradient norm {:.3e})",
                      state.time, it, gradient_norm),
          state.time, it, gradient_norm, std::move(v));
    }
  }

  if (!converged) {
    throw StepFailureError(
        fmt::format("movement subproblem at t = {:.6g} used all {} iterations "
                    "(gradient norm {:.3e}, target {:.3e} incl. roundoff floor)",
                    state.time, cfg.inner_max_iters, gradient_norm, stop_tol),
        state.time, cfg.inner_max_iters, gradient_norm, std::move(v));
  }

  accumulate_dissipation(state, v.samples, tau, eps);
  state.field.samples = std::move(v.samples);
  state.time += tau;
}

void step(FlowState& state, const FlowConfig& cfg, const EnergyParams& p,
          const PotentialSpec& spec) {
  if (cfg.scheme == Scheme::minimizing_movements) {
    step_minimizing_movements(state, cfg, p, spec);
  } else {
    step_semi_implicit(state, cfg, p, spec);
  }
}

Trajectory evolve(FlowState state, const FlowConfig& cfg, const EnergyParams& p,
                  const PotentialSpec& spec, const EvolveOptions& opts) {
  validate_flow_config(cfg);
  require_torus_field(state.field);
  if (opts.record_stride < 1) {
    throw std::invalid_argument("evolve: record_stride must be at least 1");
  }
  if (opts.snapshot_stride < 0) {
    throw std::invalid_argument("evolve: snapshot_stride must be nonnegative");
  }
  for (const auto& obs : opts.observers) {
    if (obs.stride < 1) {
      throw std::invalid_argument("evolve: observer stride must be at least 1");
    }
  }

  const double remaining = cfg.t_end - state.time;
  long long n_steps = std::llround(remaining / cfg.tau);
  if (n_steps < 0) {
    n_steps = 0;
  }
  if (static_cast<double>(n_steps) * cfg.tau <
      remaining - 1e-9 * std::max(1.0, std::abs(cfg.t_end))) {
    ++n_steps;
  }

  Trajectory traj;
  traj.config = cfg;

  auto due = [n_steps](long long s, int stride) {
    return s == 0 || s == n_steps || s % stride == 0;
  };

  auto record = [&](long long s) {
    if (due(s, opts.record_stride)) {
      const EnergyBreakdown e = energy_eps(state.field, p, spec);
      traj.times.push_back(state.time);
      traj.energies.push_back(e);
      traj.mean_u.push_back(mean_of(state.field.samples));
      traj.mean_wprime.push_back(mean_wprime_of(state.field.samples, spec));
      traj.dissipation.push_back(state.dissipation_accum);
      state.energy_history.emplace_back(state.time, e);
    }
    if (opts.snapshot_stride > 0 && due(s, opts.snapshot_stride)) {
      traj.snapshot_times.push_back(state.time);
      traj.snapshots.push_back(state.field);
    }
    for (const auto& obs : opts.observers) {
      if (obs.callback && due(s, obs.stride)) {
        obs.callback(state);
      }
    }
  };

  record(0);
  for (long long s = 1; s <= n_steps; ++s) {
    step(state, cfg, p, spec);
    record(s);
  }

  traj.dissipation_accum = state.dissipation_accum;
  traj.final_state = std::move(state);
  return traj;
}

double mass_identity_residual(const Trajectory& traj, const EnergyParams& p,
                              const PotentialSpec& spec) {
  validate_params(p, spec);
  const double tau = traj.config.tau;
  if (traj.snapshots.size() < 2) {
    throw std::invalid_argument(
        "mass identity: needs snapshots at every step (at least two)");
  }
  for (std::size_t i = 1; i < traj.snapshot_times.size(); ++i) {
    const double dt = traj.snapshot_times[i] - traj.snapshot_times[i - 1];
    if (std::abs(dt - tau) > 1e-9 * tau) {
      throw std::invalid_argument(
          fmt::format("mass identity: snapshot stride is {:.6g}, not the step {:.6g}; "
                      "record with snapshot_stride = 1",
                      dt, tau));
    }
  }

  const double mass0 = mean_of(traj.snapshots.front().samples);
  double wprime_sum = 0.0;
  double residual_max = 0.0;
  for (std::size_t i = 1; i < traj.snapshots.size(); ++i) {
    wprime_sum += tau * mean_wprime_of(traj.snapshots[i - 1].samples, spec);
    const double mass = mean_of(traj.snapshots[i].samples);
    residual_max = std::max(residual_max, std::abs(mass - (mass0 - wprime_sum)));
  }
  return residual_max;
}

}  // namespace shlab
