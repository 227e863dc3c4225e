#include "shlab/slowmotion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include <fmt/core.h>

#include "shlab/parallel.hpp"

namespace shlab {

namespace {

double torus_gap_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

int interior_sign(int leading_sign, int arc_index) {
  // Arc j runs from jump j to jump j+1; signs alternate away from the leading arc.
  return (arc_index % 2 == 0) ? -leading_sign : leading_sign;
}

int count_zeros(const Field& f, double min_separation) {
  bool away_from_zero = false;
  for (double s : f.samples) {
    if (std::abs(s) > 1e-14) {
      away_from_zero = true;
      break;
    }
  }
  if (!away_from_zero) {
    return 0;
  }
  return static_cast<int>(find_zeros(f, min_separation).locations.size());
}

ComplianceReport measure_compliance(const Field& u, const JumpFunction& v,
                                    const SlowMotionConfig& cfg, const EnergyParams& p,
                                    const PotentialSpec& spec,
                                    const ProfileConstants& consts) {
  ComplianceReport rep;
  rep.delta = cfg.delta;

  const std::vector<double> xs = u.grid.nodes();
  double acc = 0.0;
  for (int i = 0; i < u.grid.n; ++i) {
    acc += std::abs(u.samples[static_cast<std::size_t>(i)] -
                    v.sign_at(xs[static_cast<std::size_t>(i)]));
  }
  rep.l1_distance = acc / static_cast<double>(u.grid.n);

  rep.energy_total = energy_eps(u, p, spec).total;
  rep.gamma_limit = static_cast<double>(v.n_jumps()) * consts.m1;
  rep.energy_excess = rep.energy_total - rep.gamma_limit;
  const double gamma = linearization(spec, p.q).gamma;
  rep.h_eps = preparation_h(cfg, v.min_gap(), gamma, p.epsilon);
  rep.l1_pass = rep.l1_distance <= cfg.delta;
  rep.excess_pass = rep.energy_excess <= 1.0 / rep.h_eps;

  const double min_sep = std::max(v.min_gap() / 4.0, 2.5 * u.grid.spacing());
  rep.zeros = find_zeros(u, min_sep).locations;
  if (rep.zeros.empty()) {
    rep.max_zero_offset = std::numeric_limits<double>::infinity();
  } else {
    double worst = 0.0;
    for (double xj : v.jump_locations) {
      double best = std::numeric_limits<double>::infinity();
      for (double z : rep.zeros) {
        best = std::min(best, torus_gap_distance(z, xj));
      }
      worst = std::max(worst, best);
    }
    rep.max_zero_offset = worst;
  }
  return rep;
}

struct RunGates {
  double d_nominal = 0.0;
  double gamma = 0.0;
};

TimescaleRow run_departure_sweep_point(const JumpFunction& v_run, const SlowMotionConfig& cfg,
                                       double q, const PotentialSpec& spec,
                                       const ProfileConstants& consts,
                                       const TimescaleOptions& options, double eps,
                                       const RunGates& gates) {
  TimescaleRow row;
  row.eps = eps;
  row.tau = options.tau;

  const EnergyParams p{eps, q};
  InitialDataOptions init_opts;
  init_opts.grid_n = options.grid_n;
  init_opts.t_prep = options.t_prep;
  init_opts.tau_prep = options.tau;
  init_opts.enforce_compliance = false;  // misses are recorded in the row flags
  InitialData init = make_initial_data(v_run, cfg, p, spec, consts, init_opts);
  row.compliance = init.report;
  row.energy_initial = init.report.energy_total;

  const Field u0 = init.field;
  FlowState state = make_flow_state(std::move(init.field));

  FlowConfig fc;
  fc.tau = options.tau;
  fc.scheme = options.scheme;
  fc.t_end = options.t_end_initial;
  validate_flow_config(fc);

  const long long steps_per_check = std::llround(options.check_interval / options.tau);
  if (steps_per_check < 1 ||
      std::abs(static_cast<double>(steps_per_check) * options.tau - options.check_interval) >
          1e-9 * options.check_interval) {
    throw std::invalid_argument(
        "timescale experiment: check_interval must be a positive multiple of tau");
  }

  const double t_obs_raw = observation_horizon(gates.d_nominal, cfg.delta, gates.gamma, eps);
  const long long steps_to_tobs =
      static_cast<long long>(std::floor(t_obs_raw / options.tau));
  const double zero_min_sep =
      std::max(v_run.min_gap() / 4.0, 2.5 * u0.grid.spacing());

  const auto wall_start = std::chrono::steady_clock::now();
  auto wall_exceeded = [&]() {
    if (options.budget_seconds <= 0.0) {
      return false;
    }
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - wall_start;
    return elapsed.count() > options.budget_seconds;
  };

  double t_end = options.t_end_initial;
  long long step_count = 0;
  double t_now = 0.0;
  int prev_count = count_zeros(state.field, zero_min_sep);

  while (true) {
    for (long long s = 0; s < steps_per_check; ++s) {
      step(state, fc, p, spec);
      ++step_count;
      if (step_count == steps_to_tobs) {
        row.sup_l1_through_t_obs = std::max(row.sup_l1_through_t_obs,
                                            distance(state.field, u0, Norm::L1));
      }
    }
    t_now = static_cast<double>(step_count) * options.tau;
    const double l1 = distance(state.field, u0, Norm::L1);
    if (t_now <= t_obs_raw) {
      row.sup_l1_through_t_obs = std::max(row.sup_l1_through_t_obs, l1);
    }
    const int count = count_zeros(state.field, zero_min_sep);
    if (count > prev_count) {
      row.interface_count_nonincreasing = false;
    }
    prev_count = count;

    if (l1 > cfg.departure_threshold) {
      row.departure = t_now;
      row.l1_at_departure = l1;
      row.energy_at_departure = energy_eps(state.field, p, spec).total;
      break;
    }
    if (wall_exceeded()) {
      row.budget_hit = true;
      break;
    }
    if (t_now >= t_end - 0.5 * options.tau) {
      if (2.0 * t_end > options.t_max * (1.0 + 1e-12)) {
        row.budget_hit = true;
        break;
      }
      t_end *= 2.0;
    }
  }

  row.t_obs = std::min(t_obs_raw, t_now);
  return row;
}

}  // namespace

double JumpFunction::min_gap() const {
  if (jump_locations.size() < 2) {
    return 0.0;
  }
  double gap = jump_locations.front() + 1.0 - jump_locations.back();
  for (std::size_t j = 1; j < jump_locations.size(); ++j) {
    gap = std::min(gap, jump_locations[j] - jump_locations[j - 1]);
  }
  return gap;
}

double JumpFunction::sign_at(double x) const {
  double r = x - std::floor(x);
  if (r >= 1.0) {
    r = 0.0;
  }
  if (jump_locations.empty() || r < jump_locations.front()) {
    return static_cast<double>(leading_sign);
  }
  const auto it =
      std::upper_bound(jump_locations.begin(), jump_locations.end(), r);
  const int j = static_cast<int>(it - jump_locations.begin()) - 1;
  return static_cast<double>(interior_sign(leading_sign, j));
}

void validate_jump_function(const JumpFunction& v) {
  const int nj = v.n_jumps();
  if (nj < 2 || nj % 2 != 0) {
    throw std::invalid_argument(
        fmt::format("jump function: needs an even count of at least two jumps, got {}", nj));
  }
  if (v.leading_sign != 1 && v.leading_sign != -1) {
    throw std::invalid_argument("jump function: leading_sign must be +1 or -1");
  }
  for (std::size_t j = 0; j < v.jump_locations.size(); ++j) {
    const double x = v.jump_locations[j];
    if (!std::isfinite(x) || x < 0.0 || x >= 1.0) {
      throw std::invalid_argument(
          fmt::format("jump function: location {:.6g} is outside [0, 1)", x));
    }
    if (j > 0 && !(x > v.jump_locations[j - 1])) {
      throw std::invalid_argument("jump function: locations must be strictly increasing");
    }
  }
  if (!(v.min_gap() > 0.0)) {
    throw std::invalid_argument("jump function: all periodic gaps must be positive");
  }
}

void validate_slow_motion_config(const SlowMotionConfig& cfg, const JumpFunction& v) {
  validate_jump_function(v);
  const double d = v.min_gap();
  const double ceiling = std::min(1.0, d / 8.0);
  if (!(cfg.delta > 0.0) || !(cfg.delta < ceiling)) {
    throw std::invalid_argument(
        fmt::format("slow motion config: delta must lie in (0, {:.6g}), got {:.6g}", ceiling,
                    cfg.delta));
  }
  if (!(cfg.departure_threshold > 0.0)) {
    throw std::invalid_argument("slow motion config: departure_threshold must be positive");
  }
  if (cfg.h_of_eps == PreparationScale::power && !(cfg.power_exponent > 0.0)) {
    throw std::invalid_argument("slow motion config: power_exponent must be positive");
  }
  if (cfg.eps_values.empty()) {
    throw std::invalid_argument("slow motion config: eps_values must be nonempty");
  }
  for (double eps : cfg.eps_values) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
      throw std::invalid_argument("slow motion config: eps_values must be positive and finite");
    }
  }
}

double preparation_h(const SlowMotionConfig& cfg, double d, double gamma, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("preparation scale: eps must be positive");
  }
  if (cfg.h_of_eps == PreparationScale::exp_d_gamma) {
    return std::exp(d * gamma / eps);
  }
  return std::pow(eps, -cfg.power_exponent);
}

ComplianceError::ComplianceError(const std::string& what, ComplianceReport report_)
    : std::runtime_error(what), report(std::move(report_)) {}

Field tanh_seed_field(const JumpFunction& v, const Grid& grid, double eps, double gamma) {
  validate_jump_function(v);
  if (!(eps > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("tanh seed: eps and gamma must be positive");
  }
  const std::vector<double> xs = grid.nodes();
  Field u{grid, std::vector<double>(static_cast<std::size_t>(grid.n), 0.0)};
  const int nj = v.n_jumps();
  for (int j = 0; j < nj; ++j) {
    const double a = v.jump_locations[static_cast<std::size_t>(j)];
    const bool last = (j == nj - 1);
    const double b = last ? v.jump_locations.front() + 1.0
                          : v.jump_locations[static_cast<std::size_t>(j) + 1];
    const double sigma = interior_sign(v.leading_sign, j);
    for (int i = 0; i < grid.n; ++i) {
      double x = xs[static_cast<std::size_t>(i)];
      if (last && x < a) {
        x += 1.0;
      }
      if (x >= a && x <= b) {
        u.samples[static_cast<std::size_t>(i)] =
            sigma * std::tanh(gamma * (x - a) / eps) * std::tanh(gamma * (b - x) / eps);
      }
    }
  }
  return u;
}

InitialData make_initial_data(const JumpFunction& v, const SlowMotionConfig& cfg,
                              const EnergyParams& p, const PotentialSpec& spec,
                              const ProfileConstants& consts,
                              const InitialDataOptions& options) {
  validate_slow_motion_config(cfg, v);
  validate_params(p, spec);
  const double d = v.min_gap();
  if (!(d >= 4.0 * p.epsilon)) {
    throw std::invalid_argument(
        fmt::format("initial data: minimal gap {:.4g} must be at least 4 eps = {:.4g} "
                    "for a resolved transition",
                    d, 4.0 * p.epsilon));
  }
  const LinearizationConstants lin = linearization(spec, p.q);
  const Grid grid = Grid::torus(options.grid_n);

  Field u = tanh_seed_field(v, grid, p.epsilon, lin.gamma);

  if (options.t_prep > 0.0) {
    if (!(options.tau_prep > 0.0)) {
      throw std::invalid_argument("initial data: tau_prep must be positive");
    }
    FlowConfig prep_cfg;
    prep_cfg.tau = options.tau_prep;
    prep_cfg.scheme = Scheme::semi_implicit;
    prep_cfg.t_end = options.t_prep;
    validate_flow_config(prep_cfg);
    const long long n_prep = std::llround(options.t_prep / options.tau_prep);
    FlowState state = make_flow_state(std::move(u));
    for (long long s = 0; s < n_prep; ++s) {
      step_semi_implicit(state, prep_cfg, p, spec);
    }
    u = std::move(state.field);
  }

  ComplianceReport report = measure_compliance(u, v, cfg, p, spec, consts);
  if (options.enforce_compliance && !(report.l1_pass && report.excess_pass)) {
    const std::string what = fmt::format(
        "prepared data misses the closeness requirements: L1 distance {:.6g} "
        "(allowed {:.6g}), energy excess {:.6g} (allowed {:.6g})",
        report.l1_distance, report.delta, report.energy_excess, 1.0 / report.h_eps);
    throw ComplianceError(what, std::move(report));
  }
  return InitialData{std::move(u), std::move(report)};
}

InterfaceTrack track_interfaces(const Trajectory& traj, double min_separation) {
  InterfaceTrack track;
  track.times = traj.snapshot_times;
  track.positions.reserve(traj.snapshots.size());

  std::vector<double> prev;
  bool have_prev = false;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    std::vector<double> locs;
    bool all_near_zero = true;
    for (double s : traj.snapshots[i].samples) {
      if (std::abs(s) > 1e-14) {
        all_near_zero = false;
        break;
      }
    }
    if (!all_near_zero) {
      locs = find_zeros(traj.snapshots[i], min_separation).locations;
    }
    track.counts.push_back(static_cast<int>(locs.size()));
    if (have_prev) {
      if (locs.size() < prev.size()) {
        track.collision_times.push_back(traj.snapshot_times[i]);
      }
      for (double z : locs) {
        double best = std::numeric_limits<double>::infinity();
        for (double zp : prev) {
          best = std::min(best, torus_gap_distance(z, zp));
        }
        if (std::isfinite(best)) {
          track.max_step_displacement = std::max(track.max_step_displacement, best);
        }
      }
    }
    prev = locs;
    have_prev = true;
    track.positions.push_back(std::move(locs));
  }
  return track;
}

std::optional<double> departure_time(const Trajectory& traj, const Field& u0,
                                     double threshold) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("departure time: threshold must be positive");
  }
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    if (distance(traj.snapshots[i], u0, Norm::L1) > threshold) {
      return traj.snapshot_times[i];
    }
  }
  return std::nullopt;
}

TimescaleResult timescale_experiment(const JumpFunction& v, const SlowMotionConfig& cfg,
                                     double q, const PotentialSpec& spec,
                                     const ProfileConstants& consts,
                                     const TimescaleOptions& options) {
  validate_slow_motion_config(cfg, v);
  if (cfg.eps_values.size() < 4) {
    throw std::invalid_argument(
        "timescale experiment: at least four eps values are required for the fit");
  }
  if (!(options.tau > 0.0) || !(options.check_interval > 0.0) ||
      !(options.t_end_initial >= options.check_interval) ||
      !(options.t_max >= options.t_end_initial)) {
    throw std::invalid_argument(
        "timescale experiment: need tau > 0, check_interval > 0, "
        "t_end_initial >= check_interval, t_max >= t_end_initial");
  }
  if (!(options.interface_offset >= 0.0)) {
    throw std::invalid_argument("timescale experiment: interface_offset must be nonnegative");
  }

  const double d = v.min_gap();
  const LinearizationConstants lin = linearization(spec, q);

  JumpFunction v_run = v;
  v_run.jump_locations.front() += options.interface_offset;
  validate_jump_function(v_run);
  validate_slow_motion_config(cfg, v_run);

  RunGates gates;
  gates.d_nominal = d;
  gates.gamma = lin.gamma;

  TimescaleResult result;
  result.slope_target = persistence_slope_target(d, cfg.delta, lin.gamma);
  result.rows.resize(cfg.eps_values.size());

  for_each_index_parallel(cfg.eps_values.size(), [&](std::size_t i) {
    result.rows[i] = run_departure_sweep_point(v_run, cfg, q, spec, consts, options,
                                               cfg.eps_values[i], gates);
  });

  std::vector<double> xs;
  std::vector<double> ys;
  for (const TimescaleRow& row : result.rows) {
    if (row.departure.has_value()) {
      xs.push_back(1.0 / row.eps);
      ys.push_back(*row.departure);
    } else {
      result.partial = true;
    }
  }
  if (xs.size() >= 3) {
    result.fit = fit_loglinear(xs, ys);
  } else {
    result.fit.note = "too few departures for a fit";
  }
  if (result.partial) {
    if (!result.fit.note.empty()) {
      result.fit.note += "; ";
    }
    result.fit.note += "partial: some runs ended without departure";
  }
  return result;
}

double persistence_slope_target(double d, double delta, double gamma) {
  return (d - 4.0 * delta) * gamma;
}

double observation_horizon(double d, double delta, double gamma, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("observation horizon: eps must be positive");
  }
  return delta * delta * std::exp((d - 4.0 * delta) * gamma / eps);
}

}  // namespace shlab
