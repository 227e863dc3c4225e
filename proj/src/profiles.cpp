#include "shlab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "shlab/parallel.hpp"

namespace shlab {

namespace {

std::vector<double> tanh_ramp_seed(double gamma, double length, int cells, int sign) {
  const double h = length / cells;
  std::vector<double> seed(cells + 1);
  for (int i = 0; i <= cells; ++i) {
    const double z = i * h;
    seed[i] = sign * std::tanh(gamma * z) * std::tanh(gamma * (length - z));
  }
  return seed;
}

SolveReport solve_or_throw(const IntervalProblem& prob, const std::vector<double>& seed,
                           const SolveOptions& opts = {}) {
  SolveReport rep = solve_interval(prob, seed, opts);
  if (!rep.converged) {
    throw NonConvergenceError(
        fmt::format("interval minimization stalled: residual {:.3e} above tolerance {:.3e} "
                    "(floor {:.3e}) after {} iterations on {} cells",
                    rep.el_residual_sup, opts.tol, rep.residual_floor, rep.iterations,
                    prob.cells),
        rep.el_residual_sup, opts.tol, rep.iterations);
  }
  return rep;
}

ProfileReport to_profile_report(const SolveReport& rep, int branch_sign) {
  ProfileReport out;
  out.converged = rep.converged;
  out.iterations = rep.iterations;
  out.el_residual_sup = rep.el_residual_sup;
  out.residual_floor = rep.residual_floor;
  out.end_curvature_left = rep.end_curvature_left;
  out.end_curvature_right = rep.end_curvature_right;
  out.energy = rep.energy;
  out.energy_ld = rep.energy_ld;
  out.branch_sign = branch_sign;
  return out;
}

// Stretched-coordinate midpoint data of a zero-dirichlet minimizer on (0, 1/2).
struct MidpointData {
  double value = 0.0;
  double deriv1 = 0.0, deriv2 = 0.0, deriv3 = 0.0;  // signed, stretched coordinates
};

MidpointData midpoint_data(const std::vector<double>& w, double hz) {
  const std::size_t mid = (w.size() - 1) / 2;
  MidpointData md;
  md.value = w[mid];
  md.deriv1 = (w[mid + 1] - w[mid - 1]) / (2.0 * hz);
  md.deriv2 = (w[mid + 1] - 2.0 * w[mid] + w[mid - 1]) / (hz * hz);
  md.deriv3 =
      (w[mid + 2] - 2.0 * w[mid + 1] + 2.0 * w[mid - 1] - w[mid - 2]) / (2.0 * hz * hz * hz);
  return md;
}

constexpr int kSweepCells = 4096;  // cells per zero-dirichlet sweep minimizer
constexpr double kSweepInterval = 0.5;

void validate_ratio_sweep(const std::vector<double>& d_over_eps) {
  if (d_over_eps.size() < 4) {
    throw std::invalid_argument("decay experiment: need at least 4 d/eps ratios");
  }
  const auto [lo, hi] = std::minmax_element(d_over_eps.begin(), d_over_eps.end());
  if (!(*lo > 0.0)) {
    throw std::invalid_argument("decay experiment: ratios must be positive");
  }
  if (*hi / *lo < 2.0) {
    throw std::invalid_argument(
        fmt::format("decay experiment: ratios must span a factor >= 2, got {:.3g}", *hi / *lo));
  }
}

}  // namespace

MinimizerResult minimize_interval(const Grid& grid, IntervalConstraint constraint,
                                  const std::optional<BoundaryData>& bdata,
                                  const EnergyParams& p, const PotentialSpec& spec,
                                  const std::optional<Field>& init) {
  if (grid.topology != Topology::interval) {
    throw std::invalid_argument("minimize_interval: grid must be an interval");
  }
  validate_params(p, spec);
  if (init && !init->grid.same_as(grid)) {
    throw std::invalid_argument("minimize_interval: init grid does not match");
  }

  const int cells = grid.n - 1;
  const double length = grid.length() / p.epsilon;  // stretched interval length
  IntervalProblem prob;
  prob.potential = spec;
  prob.q = p.q;
  prob.length = length;
  prob.cells = cells;

  if (constraint == IntervalConstraint::zero_dirichlet) {
    prob.left = EndCondition{0.0, std::nullopt};
    prob.right = EndCondition{0.0, std::nullopt};
    if (init) {
      SolveReport rep = solve_or_throw(prob, init->samples);
      return {Field{grid, rep.samples}, to_profile_report(rep, 0)};
    }
    const double gamma = linearization(spec, p.q).gamma;
    SolveReport plus = solve_interval(prob, tanh_ramp_seed(gamma, length, cells, +1));
    SolveReport minus = solve_interval(prob, tanh_ramp_seed(gamma, length, cells, -1));
    if (!plus.converged && !minus.converged) {
      throw NonConvergenceError(
          fmt::format("zero-dirichlet minimization stalled on both branches: residuals "
                      "{:.3e} / {:.3e} after {} / {} iterations",
                      plus.el_residual_sup, minus.el_residual_sup, plus.iterations,
                      minus.iterations),
          std::min(plus.el_residual_sup, minus.el_residual_sup), SolveOptions{}.tol,
          plus.iterations);
    }
    int branch = +1;
    if (!plus.converged || (minus.converged && minus.energy_ld < plus.energy_ld)) {
      branch = -1;
    }
    SolveReport& best = (branch > 0) ? plus : minus;
    return {Field{grid, best.samples}, to_profile_report(best, branch)};
  }

  if (!bdata) {
    throw std::invalid_argument("minimize_interval: clamped constraint requires boundary data");
  }
  if (bdata->well != +1 && bdata->well != -1) {
    throw std::invalid_argument("minimize_interval: well must be +1 or -1");
  }
  for (const double v : {bdata->alpha[0], bdata->alpha[1], bdata->beta[0], bdata->beta[1]}) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("minimize_interval: boundary data must be finite");
    }
  }
  const double well = bdata->well;
  prob.left = EndCondition{well + bdata->alpha[0], bdata->alpha[1]};
  prob.right = EndCondition{well + bdata->beta[0], bdata->beta[1]};

  std::vector<double> seed;
  if (init) {
    seed = init->samples;
  } else {
    // Constant well value plus decaying corrections matching the end data.
    const double a1 = bdata->alpha[0], a2 = bdata->alpha[1];
    const double b1 = bdata->beta[0], b2 = bdata->beta[1];
    const double h = length / cells;
    seed.resize(cells + 1);
    for (int i = 0; i <= cells; ++i) {
      const double z = i * h;
      const double zr = length - z;
      seed[i] = well + std::exp(-z) * (a1 + (a2 + a1) * z) + std::exp(-zr) * (b1 + (b1 - b2) * zr);
    }
  }
  SolveReport rep = solve_or_throw(prob, seed);
  return {Field{grid, rep.samples}, to_profile_report(rep, bdata->well)};
}

ProfileConstants estimate_m1(double q, const PotentialSpec& spec, double L, int n) {
  if (!(L >= 20.0)) {
    throw std::invalid_argument(fmt::format("estimate_m1: L = {} must be >= 20", L));
  }
  if (n < 4096 || n % 2 != 0) {
    throw std::invalid_argument(fmt::format("estimate_m1: n = {} must be even and >= 4096", n));
  }
  const double gamma = linearization(spec, q).gamma;

  const auto full_line = [&](double half_width, int cells) -> long double {
    IntervalProblem prob;
    prob.potential = spec;
    prob.q = q;
    prob.length = 2.0 * half_width;
    prob.cells = cells;
    prob.left = EndCondition{-1.0, 0.0};
    prob.right = EndCondition{+1.0, 0.0};
    const double h = prob.length / cells;
    std::vector<double> seed(cells + 1);
    for (int i = 0; i <= cells; ++i) {
      seed[i] = std::tanh(gamma * (i * h - half_width));
    }
    return solve_or_throw(prob, seed).energy_ld;
  };
  // h-extrapolation at fixed domain, then a domain-doubling check at fixed h pairs.
  const long double rich_near = (4.0L * full_line(L, 2 * n) - full_line(L, n)) / 3.0L;
  const long double rich_far = (4.0L * full_line(2.0 * L, 4 * n) - full_line(2.0 * L, 2 * n)) / 3.0L;
  const long double gap = std::abs(static_cast<double>(rich_near - rich_far));
  if (gap > 1e-6L) {
    throw ResolutionError(
        fmt::format("estimate_m1: domain truncation study disagrees by {:.3e} at L = {}",
                    static_cast<double>(gap), L),
        static_cast<double>(gap));
  }

  const auto half_line = [&](int side, int cells) -> long double {
    IntervalProblem prob;
    prob.potential = spec;
    prob.q = q;
    prob.length = L;
    prob.cells = cells;
    const double h = L / cells;
    std::vector<double> seed(cells + 1);
    if (side > 0) {
      prob.left = EndCondition{0.0, std::nullopt};
      prob.right = EndCondition{+1.0, 0.0};
      for (int i = 0; i <= cells; ++i) {
        seed[i] = std::tanh(gamma * i * h);
      }
    } else {
      prob.left = EndCondition{-1.0, 0.0};
      prob.right = EndCondition{0.0, std::nullopt};
      for (int i = 0; i <= cells; ++i) {
        seed[i] = std::tanh(gamma * (i * h - L));
      }
    }
    return solve_or_throw(prob, seed).energy_ld;
  };
  const long double m_plus = (4.0L * half_line(+1, n) - half_line(+1, n / 2)) / 3.0L;
  const long double m_minus = (4.0L * half_line(-1, n) - half_line(-1, n / 2)) / 3.0L;

  ProfileConstants consts;
  consts.m1 = static_cast<double>(rich_far);
  consts.m_plus = static_cast<double>(m_plus);
  consts.m_minus = static_cast<double>(m_minus);
  consts.q = q;
  consts.truncation_L = L;
  consts.grid_n = n;
  consts.truncation_gap = static_cast<double>(gap);
  return consts;
}

Field construct_eta(double mid_value, double mid_slope, int s_k,
                    const LinearizationConstants& consts, const Grid& grid) {
  if (grid.topology != Topology::interval || grid.a != 0.0) {
    throw std::invalid_argument("construct_eta: grid must be an interval starting at 0");
  }
  if (s_k != +1 && s_k != -1) {
    throw std::invalid_argument("construct_eta: s_k must be +1 or -1");
  }
  if (!std::isfinite(mid_value) || !std::isfinite(mid_slope)) {
    throw std::invalid_argument("construct_eta: midpoint data must be finite");
  }
  if (std::abs(consts.delta) < 1e-12) {
    throw DegenerateFrequencyError(
        fmt::format("construct_eta: oscillation frequency {} is degenerate", consts.delta));
  }
  const double s = s_k;
  const double a = mid_value - s;
  const double b = (mid_slope + consts.gamma * a) / consts.delta;
  return make_field(grid, [&](double x) {
    const double decay = std::exp(-consts.gamma * x);
    return s + decay * (a * std::cos(consts.delta * x) + b * std::sin(consts.delta * x));
  });
}

MidpointDecayResult midpoint_decay_experiment(const std::vector<double>& d_over_eps,
                                              const EnergyParams& p_template,
                                              const PotentialSpec& spec) {
  validate_ratio_sweep(d_over_eps);
  const Grid grid = Grid::interval(0.0, kSweepInterval, kSweepCells + 1);

  MidpointDecayResult result;
  result.rows.resize(d_over_eps.size());
  for_each_index_parallel(d_over_eps.size(), [&](std::size_t i) {
    const double ratio = d_over_eps[i];
    const EnergyParams p{kSweepInterval / ratio, p_template.q};
    const MinimizerResult min = minimize_interval(grid, IntervalConstraint::zero_dirichlet,
                                                  std::nullopt, p, spec);
    const double hz = ratio / kSweepCells;
    const MidpointData md = midpoint_data(min.minimizer.samples, hz);
    MidpointSample row;
    row.d_over_eps = ratio;
    row.eps = p.epsilon;
    row.distance = std::min(std::abs(md.value - 1.0), std::abs(md.value + 1.0));
    row.deriv1 = std::abs(md.deriv1);
    row.deriv2 = std::abs(md.deriv2);
    row.deriv3 = std::abs(md.deriv3);
    row.excluded = row.distance < 1e-13;
    result.rows[i] = row;
  });

  std::vector<double> xs, ys;
  std::string excluded_note;
  for (const auto& row : result.rows) {
    if (row.excluded) {
      excluded_note += fmt::format(" d/eps={:.6g}", row.d_over_eps);
      continue;
    }
    xs.push_back(row.d_over_eps);
    ys.push_back(row.distance);
  }
  result.fit = fit_loglinear(xs, ys);
  if (!excluded_note.empty()) {
    result.fit.note = "excluded underflowing midpoints:" + excluded_note;
  }
  return result;
}

EtaDecayResult eta_decay_experiment(const std::vector<double>& d_over_eps,
                                    const EnergyParams& p_template, const PotentialSpec& spec) {
  validate_ratio_sweep(d_over_eps);
  const Grid grid = Grid::interval(0.0, kSweepInterval, kSweepCells + 1);
  const Grid eta_grid = Grid::interval(0.0, 40.0, kSweepCells + 1);
  const LinearizationConstants consts = linearization(spec, p_template.q);

  EtaDecayResult result;
  result.rows.resize(d_over_eps.size());
  for_each_index_parallel(d_over_eps.size(), [&](std::size_t i) {
    const double ratio = d_over_eps[i];
    const EnergyParams p{kSweepInterval / ratio, p_template.q};
    const MinimizerResult min = minimize_interval(grid, IntervalConstraint::zero_dirichlet,
                                                  std::nullopt, p, spec);
    const double hz = ratio / kSweepCells;
    const MidpointData md = midpoint_data(min.minimizer.samples, hz);
    const int s_k = (md.value > 0.0) ? +1 : -1;
    const Field eta = construct_eta(md.value, md.deriv1, s_k, consts, eta_grid);
    EtaDecaySample row;
    row.d_over_eps = ratio;
    row.eps = p.epsilon;
    row.mid_value = md.value;
    row.mid_slope = md.deriv1;
    row.tail_energy = energy_rescaled(eta, p.q, spec).total;
    result.rows[i] = row;
  });

  std::vector<double> xs, ys;
  for (const auto& row : result.rows) {
    xs.push_back(row.d_over_eps);
    ys.push_back(row.tail_energy);
  }
  result.fit = fit_loglinear(xs, ys);
  return result;
}

LowerBoundResult lower_bound_experiment(const std::vector<double>& zero_layout,
                                        const std::vector<double>& eps_values,
                                        const EnergyParams& p_template,
                                        const PotentialSpec& spec,
                                        const LinearizationConstants& consts,
                                        double min_zero_spacing) {
  if (zero_layout.size() < 2) {
    throw std::invalid_argument("lower_bound_experiment: need at least 2 zeros");
  }
  if (eps_values.empty()) {
    throw std::invalid_argument("lower_bound_experiment: need eps values");
  }
  std::vector<double> zeros = zero_layout;
  std::sort(zeros.begin(), zeros.end());
  if (zeros.front() < 0.0 || zeros.back() >= 1.0) {
    throw std::invalid_argument("lower_bound_experiment: zeros must lie in [0, 1)");
  }
  const int n_zeros = static_cast<int>(zeros.size());
  std::vector<double> gaps(zeros.size());
  for (std::size_t k = 0; k + 1 < zeros.size(); ++k) {
    gaps[k] = zeros[k + 1] - zeros[k];
  }
  gaps.back() = zeros.front() + 1.0 - zeros.back();
  for (const double g : gaps) {
    if (g < min_zero_spacing) {
      throw std::invalid_argument(fmt::format(
          "lower_bound_experiment: gap {:.6g} below the minimum spacing {:.6g}", g,
          min_zero_spacing));
    }
  }

  // One stretched grid spacing for every energy in the comparison: gap lengths round
  // to a multiple of 1/1024, and the reference transition energy uses the same h, so
  // the defect is a difference of identically discretized sums.
  constexpr long double kInvH = 1024.0L;
  constexpr double kHalfWidth = 40.0;
  const long double h_matched = 1.0L / kInvH;

  IntervalProblem ref;
  ref.potential = spec;
  ref.q = p_template.q;
  ref.length = 2.0 * kHalfWidth;
  ref.cells = static_cast<int>(std::llround(2.0 * kHalfWidth * 1024.0));
  ref.left = EndCondition{-1.0, 0.0};
  ref.right = EndCondition{+1.0, 0.0};
  const double gamma = consts.gamma;
  std::vector<double> ref_seed(ref.cells + 1);
  for (int i = 0; i <= ref.cells; ++i) {
    ref_seed[i] = std::tanh(gamma * (static_cast<double>(h_matched) * i - kHalfWidth));
  }
  const long double m1_matched = solve_or_throw(ref, ref_seed).energy_ld;

  LowerBoundResult result;
  result.n_zeros = n_zeros;
  result.m1_matched = static_cast<double>(m1_matched);
  result.rows.resize(eps_values.size());
  for_each_index_parallel(eps_values.size(), [&](std::size_t i) {
    const double eps = eps_values[i];
    validate_params(EnergyParams{eps, p_template.q}, spec);
    long double glued = 0.0L;
    double sum_exp = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const double gap : gaps) {
      const long long cells = std::llround(static_cast<long double>(gap) / eps * kInvH);
      if (cells < 16) {
        throw std::invalid_argument(
            fmt::format("lower_bound_experiment: eps = {} too large for gap {}", eps, gap));
      }
      IntervalProblem prob;
      prob.potential = spec;
      prob.q = p_template.q;
      prob.cells = static_cast<int>(cells);
      prob.length = static_cast<double>(cells / kInvH);
      prob.left = EndCondition{0.0, std::nullopt};
      prob.right = EndCondition{0.0, std::nullopt};
      // The two sign branches have identical energy under the even potential; the
      // positive branch stands in for both.
      const SolveReport rep =
          solve_or_throw(prob, tanh_ramp_seed(gamma, prob.length, prob.cells, +1));
      glued += rep.energy_ld;
      sum_exp += std::exp(-gamma * prob.length);
      min_ratio = std::min(min_ratio, prob.length);
    }
    const long double defect = static_cast<long double>(n_zeros) * m1_matched - glued;
    GluedEnergySample row;
    row.eps = eps;
    row.energy = static_cast<double>(glued);
    row.defect = static_cast<double>(defect);
    row.min_gap_over_eps = min_ratio;
    row.sum_exp = sum_exp;
    row.saturated = !(defect > 0.0L);
    result.rows[i] = row;
  });

  std::vector<double> xs, ys;
  std::string note;
  double envelope = 0.0;
  for (const auto& row : result.rows) {
    if (row.saturated) {
      note += fmt::format(" eps={:.6g}", row.eps);
      continue;
    }
    xs.push_back(row.min_gap_over_eps);
    ys.push_back(row.defect);
    envelope = std::max(envelope, row.defect / row.sum_exp);
  }
  if (xs.size() < 3) {
    throw std::runtime_error(
        fmt::format("lower_bound_experiment: only {} positive defects, need 3 for the fit "
                    "(saturated:{})",
                    xs.size(), note.empty() ? " none" : note.c_str()));
  }
  result.fit = fit_loglinear(xs, ys);
  if (!note.empty()) {
    result.fit.note = "excluded saturated points (defect <= 0):" + note;
  }
  result.envelope_c = envelope;
  result.intercept_c = std::exp(result.fit.intercept);
  return result;
}

FitResult clamped_deviation_sweep(const std::vector<double>& deltas, double q,
                                  const PotentialSpec& spec, double delta0) {
  if (deltas.size() < 3) {
    throw std::invalid_argument("clamped_deviation_sweep: need at least 3 offsets");
  }
  constexpr double kEps = 0.02;
  constexpr double kLength = 30.0;  // stretched
  const Grid grid = Grid::interval(0.0, kEps * kLength, 2049);
  std::vector<double> devs(deltas.size());
  for_each_index_parallel(deltas.size(), [&](std::size_t i) {
    const double delta = deltas[i];
    if (!(delta > 0.0) || delta > delta0) {
      throw std::invalid_argument(
          fmt::format("clamped_deviation_sweep: offset {} outside (0, {}]", delta, delta0));
    }
    BoundaryData bdata;
    bdata.alpha = {delta, 0.0};
    bdata.beta = {delta, 0.0};
    bdata.well = -1;
    const MinimizerResult min = minimize_interval(grid, IntervalConstraint::clamped, bdata,
                                                  EnergyParams{kEps, q}, spec);
    double dev = 0.0;
    for (const double v : min.minimizer.samples) {
      dev = std::max(dev, std::abs(v + 1.0));
    }
    devs[i] = dev;
  });
  return fit_linear(deltas, devs);
}

BadSetSweepResult bad_set_sweep(const std::vector<double>& eps_values, double delta, double q,
                                const PotentialSpec& spec) {
  if (eps_values.size() < 3) {
    throw std::invalid_argument("bad_set_sweep: need at least 3 eps values");
  }
  const Grid grid = Grid::interval(0.0, 1.0, kSweepCells + 1);
  BadSetSweepResult result;
  result.rows.resize(eps_values.size());
  for_each_index_parallel(eps_values.size(), [&](std::size_t i) {
    const EnergyParams p{eps_values[i], q};
    const MinimizerResult min =
        minimize_interval(grid, IntervalConstraint::zero_dirichlet, std::nullopt, p, spec);
    result.rows[i] = BadSetSample{p.epsilon, bad_set_measure(min.minimizer, p, delta)};
  });
  std::vector<double> xs, ys;
  for (const auto& row : result.rows) {
    xs.push_back(row.eps);
    ys.push_back(row.measure);
    result.c1 = std::max(result.c1, row.measure / row.eps);
  }
  result.fit = fit_linear(xs, ys);
  return result;
}

}  // namespace shlab
