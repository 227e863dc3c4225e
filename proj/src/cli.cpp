#include "shlab/cli.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <fmt/core.h>

#include "shlab/energy.hpp"
#include "shlab/field.hpp"
#include "shlab/fitting.hpp"
#include "shlab/flow.hpp"
#include "shlab/json_io.hpp"
#include "shlab/parallel.hpp"
#include "shlab/potential.hpp"
#include "shlab/profiles.hpp"
#include "shlab/slowmotion.hpp"

namespace shlab {

namespace {

// ---------------------------------------------------------------------------
// config file plumbing

std::string config_path_from_argv(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      return argv[i + 1];
    }
    if (arg.rfind("--config=", 0) == 0) {
      return arg.substr(9);
    }
  }
  return {};
}

OrderedJson load_config_file(const std::string& path) {
  if (path.empty()) {
    return OrderedJson::object();
  }
  try {
    return OrderedJson::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(fmt::format("config '{}': {}", path, e.what()));
  }
}

template <typename T>
void from_config(const OrderedJson& root, const std::vector<std::string>& path, T& out) {
  const OrderedJson* cur = &root;
  for (const std::string& key : path) {
    auto it = cur->find(key);
    if (it == cur->end()) {
      return;
    }
    cur = &*it;
  }
  try {
    out = cur->get<T>();
  } catch (const nlohmann::json::exception&) {
    std::string joined;
    for (const std::string& key : path) {
      if (!joined.empty()) {
        joined += '.';
      }
      joined += key;
    }
    throw std::invalid_argument(
        fmt::format("config: field '{}' has the wrong type", joined));
  }
}

PotentialSpec potential_from_config(const OrderedJson& file) {
  if (!file.contains("potential")) {
    return PotentialSpec::prototype();
  }
  const OrderedJson& pj = file.at("potential");
  const std::string kind = pj.value("kind", std::string("prototype"));
  if (kind == "prototype") {
    return PotentialSpec::prototype();
  }
  if (kind == "polynomial") {
    if (!pj.contains("coeffs")) {
      throw std::invalid_argument(
          "config: potential.coeffs is required when kind is polynomial");
    }
    if (!pj.contains("c_w")) {
      throw std::invalid_argument(
          "config: potential.c_w is required when kind is polynomial");
    }
    return PotentialSpec::even_polynomial(pj.at("coeffs").get<std::vector<double>>(),
                                          pj.at("c_w").get<double>());
  }
  throw std::invalid_argument(
      fmt::format("config: potential.kind must be prototype or polynomial, got '{}'", kind));
}

OrderedJson potential_to_json(const PotentialSpec& spec) {
  OrderedJson j;
  j["kind"] = spec.kind == PotentialKind::prototype_quartic ? "prototype" : "polynomial";
  j["coeffs"] = spec.coeffs;
  j["c_w"] = spec.c_w;
  j["w2_at_1"] = spec.w2_at_1;
  return j;
}

std::string resolve_out_dir(std::string dir, const std::string& sub) {
  if (dir.empty()) {
    dir = fmt::format("out/{}", sub);
  }
  std::filesystem::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("SHLAB_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
      p = std::filesystem::path(root) / p;
    }
  }
  return p.string();
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

// "a,b,c" as a list, "start:stop:count" as count equally spaced values.
std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
    const std::size_t c1 = text.find(':');
    const std::size_t c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::invalid_argument(
          fmt::format("range '{}' must have the form start:stop:count", text));
    }
    try {
      start = std::stod(text.substr(0, c1));
      stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
      count = std::stoi(text.substr(c2 + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("cannot parse range '{}'", text));
    }
    if (count < 2) {
      throw std::invalid_argument("range count must be at least 2");
    }
    for (int i = 0; i < count; ++i) {
      out.push_back(start + (stop - start) * static_cast<double>(i) /
                                static_cast<double>(count - 1));
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) {
      comma = text.size();
    }
    const std::string cell = text.substr(pos, comma - pos);
    if (!cell.empty()) {
      try {
        out.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument(fmt::format("cannot parse '{}' as a number", cell));
      }
    }
    pos = comma + 1;
  }
  if (out.empty()) {
    throw std::invalid_argument(fmt::format("no values in '{}'", text));
  }
  return out;
}

std::array<double, 2> parse_pair(const std::string& text, const char* what) {
  const std::vector<double> values = parse_values(text);
  if (values.size() != 2) {
    throw std::invalid_argument(fmt::format("{} must be two comma-separated numbers", what));
  }
  return {values[0], values[1]};
}

OrderedJson fit_to_json(const FitResult& fit) {
  OrderedJson j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  OrderedJson points = OrderedJson::array();
  for (const auto& [x, y] : fit.points) {
    points.push_back(OrderedJson::array({x, y}));
  }
  j["points"] = points;
  j["note"] = fit.note;
  return j;
}

void emit(const std::string& text) { std::cout << text; }

// ---------------------------------------------------------------------------
// subcommand parameter blocks (defaults, then config file, then flags)

struct ConstantsArgs {
  double q = 0.0;
  std::string out;
};

struct ValidateArgs {
  int samples = 2001;
  double s_max = 3.0;
  std::string out;
};

struct EnergyArgs {
  double epsilon = 0.05;
  double q = 0.0;
  std::string input;
  std::string out;
};

struct SimulateArgs {
  double epsilon = 0.05;
  double q = 0.1;
  double tau = 1e-4;
  double t_end = 0.5;
  std::string scheme = "si";
  int grid_n = 1024;
  std::string init = "two-interface";
  int snap_stride = 0;
  int record_stride = 1;
  double inner_tol = 1e-10;
  int inner_max_iters = 500;
  std::uint64_t seed = 1;
  std::string out;
};

struct M1Args {
  double q = 0.0;
  double L = 40.0;
  int n = 8192;
  std::string out;
};

struct ProfileArgs {
  double length = 25.0;
  int cells = 4096;
  double epsilon = 1.0;
  double q = 0.0;
  std::string constraint = "zero-dirichlet";
  int well = -1;
  std::string alpha = "0,0";
  std::string beta = "0,0";
  std::string init;
  std::string out;
};

struct MidpointArgs {
  double q = 0.0;
  std::string ratios = "10,15,20,25";
  std::string out;
};

struct BoundArgs {
  double q = 0.0;
  std::string zeros = "0,0.5";
  std::string eps = "0.01,0.015,0.02,0.025,0.03";
  double min_zero_spacing = 0.1;
  std::string out;
};

struct SlowMotionArgs {
  std::string jumps = "0.25,0.75";
  double delta = 0.05;
  double threshold = -1.0;  // < 0 means: use delta
  std::string eps = "0.06,0.05,0.04,0.03";
  double q = 0.0;
  std::string scheme = "si";
  std::string h_mode = "exp-d-gamma";
  double power_exponent = 2.0;
  double budget_seconds = 0.0;
  int grid_n = 256;
  double tau = 2e-3;
  double t_prep = 2.0;
  double check_interval = 0.5;
  double t_end_initial = 64.0;
  double t_max = 20000.0;
  double offset = 0.045;
  double m1_L = 40.0;
  int m1_n = 8192;
  std::string out;
};

// ---------------------------------------------------------------------------
// handlers

int run_constants(const PotentialSpec& spec, const ConstantsArgs& args) {
  const LinearizationConstants lin = linearization(spec, args.q);
  const SternbergReport st = sternberg_check(lin, 2);

  OrderedJson config;
  config["subcommand"] = "constants";
  config["potential"] = potential_to_json(spec);
  config["q"] = args.q;

  OrderedJson j = artifact_envelope(config);
  j["gamma"] = lin.gamma;
  j["delta"] = lin.delta;
  OrderedJson roots = OrderedJson::array();
  for (const auto& r : lin.roots) {
    OrderedJson rj;
    rj["re"] = r.real();
    rj["im"] = r.imag();
    roots.push_back(rj);
  }
  j["roots"] = roots;
  OrderedJson stj;
  stj["order_checked"] = st.order_checked;
  stj["condition_holds"] = st.condition_holds;
  stj["spectral_spread_plus"] = st.spectral_spread_plus;
  stj["spectral_spread_minus"] = st.spectral_spread_minus;
  stj["q_smoothness"] = st.q_smoothness;
  j["sternberg"] = stj;

  const std::string text = dump_json(j);
  emit(text);
  const std::string dir = resolve_out_dir(args.out, "constants");
  write_file_atomic(join_path(dir, "constants.json"), text);
  return 0;
}

int run_validate(const PotentialSpec& spec, const ValidateArgs& args) {
  const ValidationReport report = validate_hypotheses(spec, args.samples, args.s_max);

  OrderedJson config;
  config["subcommand"] = "validate-potential";
  config["potential"] = potential_to_json(spec);
  config["samples"] = args.samples;
  config["s_max"] = args.s_max;

  OrderedJson j = artifact_envelope(config);
  j["all_pass"] = report.all_pass;
  OrderedJson checks = OrderedJson::array();
  for (const auto& check : report.checks) {
    OrderedJson cj;
    cj["name"] = check.name;
    cj["pass"] = check.pass;
    cj["margin"] = check.margin;
    checks.push_back(cj);
  }
  j["checks"] = checks;

  const std::string text = dump_json(j);
  emit(text);
  const std::string dir = resolve_out_dir(args.out, "validate-potential");
  write_file_atomic(join_path(dir, "validation.json"), text);
  return report.all_pass ? 0 : 3;
}

int run_energy(const PotentialSpec& spec, const EnergyArgs& args) {
  if (args.input.empty()) {
    throw std::invalid_argument("energy: --input <csv> is required");
  }
  const Field f = read_field_csv(args.input);
  const EnergyParams p{args.epsilon, args.q};
  const EnergyBreakdown b = energy_eps(f, p, spec);

  OrderedJson config;
  config["subcommand"] = "energy";
  config["potential"] = potential_to_json(spec);
  config["epsilon"] = args.epsilon;
  config["q"] = args.q;
  config["input"] = args.input;

  OrderedJson j = artifact_envelope(config);
  j["total"] = b.total;
  j["potential_term"] = b.potential_term;
  j["gradient_term"] = b.gradient_term;
  j["hessian_term"] = b.hessian_term;
  j["under_resolved"] = b.under_resolved;

  const std::string text = dump_json(j);
  emit(text);
  const std::string dir = resolve_out_dir(args.out, "energy");
  write_file_atomic(join_path(dir, "energy.json"), text);
  return 0;
}

Field build_initial_field(const SimulateArgs& args, const PotentialSpec& spec,
                          bool grid_n_given) {
  const std::string& init = args.init;
  if (init == "two-interface") {
    const JumpFunction v{{0.25, 0.75}, -1};
    const double gamma = linearization(spec, args.q).gamma;
    return tanh_seed_field(v, Grid::torus(args.grid_n), args.epsilon, gamma);
  }
  if (init.rfind("constant:", 0) == 0) {
    double value = 0.0;
    try {
      value = std::stod(init.substr(9));
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("cannot parse '{}'", init));
    }
    return constant_field(Grid::torus(args.grid_n), value);
  }
  if (init.rfind("random:", 0) == 0) {
    int max_mode = 0;
    try {
      max_mode = std::stoi(init.substr(7));
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("cannot parse '{}'", init));
    }
    return random_band_limited(Grid::torus(args.grid_n), max_mode, args.seed);
  }
  Field f = read_field_csv(init);
  if (f.grid.topology != Topology::torus) {
    throw std::invalid_argument(
        fmt::format("simulate: '{}' holds an interval field; the flow needs a torus", init));
  }
  if (grid_n_given && f.grid.n != args.grid_n) {
    throw std::invalid_argument(
        fmt::format("simulate: --grid-n {} conflicts with the {} nodes in '{}'", args.grid_n,
                    f.grid.n, init));
  }
  return f;
}

int run_simulate(const PotentialSpec& spec, const SimulateArgs& args, bool grid_n_given) {
  const EnergyParams p{args.epsilon, args.q};
  validate_params(p, spec);

  FlowConfig cfg;
  cfg.tau = args.tau;
  cfg.scheme = parse_scheme(args.scheme);
  cfg.inner_tol = args.inner_tol;
  cfg.inner_max_iters = args.inner_max_iters;
  cfg.t_end = args.t_end;
  validate_flow_config(cfg);

  Field u0 = build_initial_field(args, spec, grid_n_given);

  OrderedJson config;
  config["subcommand"] = "simulate";
  config["potential"] = potential_to_json(spec);
  config["epsilon"] = args.epsilon;
  config["q"] = args.q;
  config["tau"] = args.tau;
  config["t_end"] = args.t_end;
  config["scheme"] = scheme_name(cfg.scheme);
  config["grid_n"] = u0.grid.n;
  config["init"] = args.init;
  config["snap_stride"] = args.snap_stride;
  config["record_stride"] = args.record_stride;
  config["inner_tol"] = args.inner_tol;
  config["inner_max_iters"] = args.inner_max_iters;
  config["seed"] = args.seed;

  EvolveOptions opts;
  opts.record_stride = args.record_stride;
  opts.snapshot_stride = args.snap_stride;

  Trajectory traj = evolve(make_flow_state(std::move(u0)), cfg, p, spec, opts);

  const std::string dir = resolve_out_dir(args.out, "simulate");

  std::string csv = csv_preamble(config);
  csv += "t,total,potential,gradient,hessian,dissipation\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    csv += fmt::format("{},{},{},{},{},{}\n", format_sig17(traj.times[i]),
                       format_sig17(traj.energies[i].total),
                       format_sig17(traj.energies[i].potential_term),
                       format_sig17(traj.energies[i].gradient_term),
                       format_sig17(traj.energies[i].hessian_term),
                       format_sig17(traj.dissipation[i]));
  }
  write_file_atomic(join_path(dir, "energy.csv"), csv);

  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const std::string name = fmt::format("t_{:012.6f}.csv", traj.snapshot_times[i]);
    write_file_atomic(join_path(join_path(dir, "snapshots"), name),
                      field_to_csv(traj.snapshots[i], config));
  }

  if (!traj.snapshots.empty()) {
    const double h = traj.snapshots.front().grid.spacing();
    const InterfaceTrack track = track_interfaces(traj, 4.0 * h);
    OrderedJson zj = artifact_envelope(config);
    zj["times"] = track.times;
    zj["zeros"] = track.positions;
    zj["counts"] = track.counts;
    zj["collision_times"] = track.collision_times;
    write_file_atomic(join_path(dir, "zeros.json"), dump_json(zj));
  }

  OrderedJson j = artifact_envelope(config);
  OrderedJson summary;
  summary["steps"] = static_cast<long long>(std::llround(traj.final_state.time / cfg.tau));
  summary["time_final"] = traj.final_state.time;
  summary["energy_initial"] = traj.energies.front().total;
  summary["energy_final"] = traj.energies.back().total;
  summary["dissipation"] = traj.dissipation_accum;
  summary["mean_u_final"] = traj.mean_u.back();
  if (args.snap_stride == 1) {
    summary["mass_identity_residual"] = mass_identity_residual(traj, p, spec);
  } else {
    summary["mass_identity_residual"] = nullptr;
  }
  summary["under_resolved"] = traj.energies.front().under_resolved;
  j["summary"] = summary;
  const std::string text = dump_json(j);
  write_file_atomic(join_path(dir, "run.json"), text);
  emit(text);
  return 0;
}

int run_m1(const PotentialSpec& spec, const M1Args& args) {
  const ProfileConstants consts = estimate_m1(args.q, spec, args.L, args.n);

  OrderedJson config;
  config["subcommand"] = "m1";
  config["potential"] = potential_to_json(spec);
  config["q"] = args.q;
  config["L"] = args.L;
  config["n"] = args.n;

  OrderedJson j = artifact_envelope(config);
  j["m1"] = consts.m1;
  j["m_plus"] = consts.m_plus;
  j["m_minus"] = consts.m_minus;
  j["truncation_L"] = consts.truncation_L;
  j["grid_n"] = consts.grid_n;
  j["truncation_gap"] = consts.truncation_gap;

  const std::string text = dump_json(j);
  emit(text);
  const std::string dir = resolve_out_dir(args.out, "m1");
  write_file_atomic(join_path(dir, "m1.json"), text);
  return 0;
}

int run_profile(const PotentialSpec& spec, const ProfileArgs& args) {
  const Grid grid = Grid::interval(0.0, args.length, args.cells + 1);
  const EnergyParams p{args.epsilon, args.q};

  IntervalConstraint constraint;
  std::optional<BoundaryData> bdata;
  if (args.constraint == "zero-dirichlet") {
    constraint = IntervalConstraint::zero_dirichlet;
  } else if (args.constraint == "clamped") {
    constraint = IntervalConstraint::clamped;
    BoundaryData bd;
    bd.alpha = parse_pair(args.alpha, "--alpha");
    bd.beta = parse_pair(args.beta, "--beta");
    bd.well = args.well;
    bdata = bd;
  } else {
    throw std::invalid_argument(fmt::format(
        "profile: constraint must be zero-dirichlet or clamped, got '{}'", args.constraint));
  }

  std::optional<Field> init;
  if (!args.init.empty()) {
    init = read_field_csv(args.init);
  }

  const MinimizerResult res = minimize_interval(grid, constraint, bdata, p, spec, init);

  OrderedJson config;
  config["subcommand"] = "minimize-profile";
  config["potential"] = potential_to_json(spec);
  config["length"] = args.length;
  config["cells"] = args.cells;
  config["epsilon"] = args.epsilon;
  config["q"] = args.q;
  config["constraint"] = args.constraint;
  if (bdata.has_value()) {
    config["well"] = bdata->well;
    config["alpha"] = std::vector<double>{bdata->alpha[0], bdata->alpha[1]};
    config["beta"] = std::vector<double>{bdata->beta[0], bdata->beta[1]};
  }
  config["init"] = args.init;

  const std::string dir = resolve_out_dir(args.out, "minimize-profile");
  write_file_atomic(join_path(dir, "profile.csv"), field_to_csv(res.minimizer, config));

  OrderedJson j = artifact_envelope(config);
  j["converged"] = res.report.converged;
  j["iterations"] = res.report.iterations;
  j["el_residual_sup"] = res.report.el_residual_sup;
  j["residual_floor"] = res.report.residual_floor;
  j["end_curvature_left"] = res.report.end_curvature_left;
  j["end_curvature_right"] = res.report.end_curvature_right;
  j["energy"] = res.report.energy;
  j["branch_sign"] = res.report.branch_sign;
  const std::string text = dump_json(j);
  write_file_atomic(join_path(dir, "report.json"), text);
  emit(text);
  return 0;
}

int run_midpoint(const PotentialSpec& spec, const MidpointArgs& args) {
  const std::vector<double> ratios = parse_values(args.ratios);
  const EnergyParams p_template{1.0, args.q};
  const MidpointDecayResult res = midpoint_decay_experiment(ratios, p_template, spec);

  OrderedJson config;
  config["subcommand"] = "midpoint-decay";
  config["potential"] = potential_to_json(spec);
  config["q"] = args.q;
  config["ratios"] = ratios;

  const std::string dir = resolve_out_dir(args.out, "midpoint-decay");

  std::string csv = csv_preamble(config);
  csv += "d_over_eps,eps,distance,deriv1,deriv2,deriv3,excluded\n";
  for (const MidpointSample& row : res.rows) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", format_sig17(row.d_over_eps),
                       format_sig17(row.eps), format_sig17(row.distance),
                       format_sig17(row.deriv1), format_sig17(row.deriv2),
                       format_sig17(row.deriv3), row.excluded ? 1 : 0);
  }
  write_file_atomic(join_path(dir, "table.csv"), csv);

  OrderedJson j = artifact_envelope(config);
  j["fit"] = fit_to_json(res.fit);
  const std::string text = dump_json(j);
  write_file_atomic(join_path(dir, "fit.json"), text);
  emit(text);
  return 0;
}

int run_bound(const PotentialSpec& spec, const BoundArgs& args) {
  const std::vector<double> zeros = parse_values(args.zeros);
  const std::vector<double> eps_values = parse_values(args.eps);
  const EnergyParams p_template{1.0, args.q};
  const LinearizationConstants lin = linearization(spec, args.q);
  const LowerBoundResult res = lower_bound_experiment(zeros, eps_values, p_template, spec,
                                                      lin, args.min_zero_spacing);

  OrderedJson config;
  config["subcommand"] = "bound-sweep";
  config["potential"] = potential_to_json(spec);
  config["q"] = args.q;
  config["zeros"] = zeros;
  config["eps_values"] = eps_values;
  config["min_zero_spacing"] = args.min_zero_spacing;

  const std::string dir = resolve_out_dir(args.out, "bound-sweep");

  std::string csv = csv_preamble(config);
  csv += "eps,min_gap_over_eps,energy,defect,sum_exp,saturated\n";
  for (const GluedEnergySample& row : res.rows) {
    csv += fmt::format("{},{},{},{},{},{}\n", format_sig17(row.eps),
                       format_sig17(row.min_gap_over_eps), format_sig17(row.energy),
                       format_sig17(row.defect), format_sig17(row.sum_exp),
                       row.saturated ? 1 : 0);
  }
  write_file_atomic(join_path(dir, "table.csv"), csv);

  OrderedJson j = artifact_envelope(config);
  j["fit"] = fit_to_json(res.fit);
  j["m1_matched"] = res.m1_matched;
  j["envelope_c"] = res.envelope_c;
  j["intercept_c"] = res.intercept_c;
  j["n_zeros"] = res.n_zeros;
  const std::string text = dump_json(j);
  write_file_atomic(join_path(dir, "fit.json"), text);
  emit(text);
  return 0;
}

int run_slow_motion(const PotentialSpec& spec, const SlowMotionArgs& args) {
  JumpFunction v;
  v.jump_locations = parse_values(args.jumps);
  v.leading_sign = -1;

  SlowMotionConfig cfg;
  cfg.delta = args.delta;
  cfg.departure_threshold = args.threshold < 0.0 ? args.delta : args.threshold;
  cfg.eps_values = parse_values(args.eps);
  if (args.h_mode == "exp-d-gamma") {
    cfg.h_of_eps = PreparationScale::exp_d_gamma;
  } else if (args.h_mode == "power") {
    cfg.h_of_eps = PreparationScale::power;
  } else {
    throw std::invalid_argument(
        fmt::format("slow-motion: --h must be exp-d-gamma or power, got '{}'", args.h_mode));
  }
  cfg.power_exponent = args.power_exponent;

  TimescaleOptions options;
  options.grid_n = args.grid_n;
  options.tau = args.tau;
  options.scheme = parse_scheme(args.scheme);
  options.t_prep = args.t_prep;
  options.check_interval = args.check_interval;
  options.t_end_initial = args.t_end_initial;
  options.t_max = args.t_max;
  options.budget_seconds = args.budget_seconds;
  options.interface_offset = args.offset;

  const ProfileConstants consts = estimate_m1(args.q, spec, args.m1_L, args.m1_n);
  const TimescaleResult res = timescale_experiment(v, cfg, args.q, spec, consts, options);

  OrderedJson config;
  config["subcommand"] = "slow-motion";
  config["potential"] = potential_to_json(spec);
  config["jumps"] = v.jump_locations;
  config["delta"] = cfg.delta;
  config["threshold"] = cfg.departure_threshold;
  config["eps_values"] = cfg.eps_values;
  config["q"] = args.q;
  config["scheme"] = args.scheme;
  config["h"] = args.h_mode;
  config["power_exponent"] = args.power_exponent;
  config["budget_seconds"] = args.budget_seconds;
  config["grid_n"] = args.grid_n;
  config["tau"] = args.tau;
  config["t_prep"] = args.t_prep;
  config["check_interval"] = args.check_interval;
  config["t_end_initial"] = args.t_end_initial;
  config["t_max"] = args.t_max;
  config["interface_offset"] = args.offset;
  config["m1_L"] = args.m1_L;
  config["m1_n"] = args.m1_n;

  const std::string dir = resolve_out_dir(args.out, "slow-motion");

  std::string csv = csv_preamble(config);
  csv += "eps,tau,departure,t_obs,sup_l1_through_t_obs,l1_at_departure,"
         "energy_initial,energy_at_departure,l1_to_jump,energy_excess,h_eps,"
         "l1_pass,excess_pass,interface_count_nonincreasing,budget_hit\n";
  for (const TimescaleRow& row : res.rows) {
    const double dep = row.departure.value_or(std::numeric_limits<double>::quiet_NaN());
    csv += fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", format_sig17(row.eps),
        format_sig17(row.tau), format_sig17(dep), format_sig17(row.t_obs),
        format_sig17(row.sup_l1_through_t_obs), format_sig17(row.l1_at_departure),
        format_sig17(row.energy_initial), format_sig17(row.energy_at_departure),
        format_sig17(row.compliance.l1_distance), format_sig17(row.compliance.energy_excess),
        format_sig17(row.compliance.h_eps), row.compliance.l1_pass ? 1 : 0,
        row.compliance.excess_pass ? 1 : 0, row.interface_count_nonincreasing ? 1 : 0,
        row.budget_hit ? 1 : 0);
  }
  write_file_atomic(join_path(dir, "departures.csv"), csv);

  OrderedJson j = artifact_envelope(config);
  j["fit"] = fit_to_json(res.fit);
  j["slope_target"] = res.slope_target;
  j["partial"] = res.partial;
  j["m1"] = consts.m1;
  const std::string text = dump_json(j);
  write_file_atomic(join_path(dir, "fit.json"), text);
  emit(text);
  return res.partial ? 4 : 0;
}

int report_error(const char* type, const std::string& message, int code) {
  OrderedJson j;
  OrderedJson err;
  err["type"] = type;
  err["message"] = message;
  j["error"] = err;
  j["exit_code"] = code;
  std::cerr << dump_json(j);
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  try {
    const OrderedJson file = load_config_file(config_path_from_argv(argc, argv));
    const PotentialSpec spec = potential_from_config(file);

    int parallelism_degree = 0;
    from_config(file, {"parallelism"}, parallelism_degree);

    CLI::App app{"numerical laboratory for a fourth-order double-well gradient flow"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --config and --parallelism follow the subcommand name
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    app.add_option("--parallelism", parallelism_degree,
                   "max concurrent sweep points (0 = hardware)");

    int exit_code = 0;

    ConstantsArgs ca;
    from_config(file, {"energy", "q"}, ca.q);
    from_config(file, {"output_dir"}, ca.out);
    auto* c_cmd = app.add_subcommand("constants", "linearization constants as JSON");
    c_cmd->add_option("--q", ca.q, "gradient coefficient q");
    c_cmd->add_option("--out", ca.out, "output directory");
    c_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_constants(spec, ca); });

    ValidateArgs va;
    from_config(file, {"validate", "samples"}, va.samples);
    from_config(file, {"validate", "s_max"}, va.s_max);
    from_config(file, {"output_dir"}, va.out);
    auto* v_cmd = app.add_subcommand("validate-potential", "check the double-well hypotheses");
    v_cmd->add_option("--samples", va.samples, "sample count");
    v_cmd->add_option("--s-max", va.s_max, "sampling range [0, s_max]");
    v_cmd->add_option("--out", va.out, "output directory");
    v_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_validate(spec, va); });

    EnergyArgs ea;
    from_config(file, {"energy", "epsilon"}, ea.epsilon);
    from_config(file, {"energy", "q"}, ea.q);
    from_config(file, {"energy", "input"}, ea.input);
    from_config(file, {"output_dir"}, ea.out);
    auto* e_cmd = app.add_subcommand("energy", "energy breakdown of a stored field");
    e_cmd->add_option("--epsilon", ea.epsilon, "interface scale");
    e_cmd->add_option("--q", ea.q, "gradient coefficient q");
    e_cmd->add_option("--input", ea.input, "field CSV (columns x,u)");
    e_cmd->add_option("--out", ea.out, "output directory");
    e_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_energy(spec, ea); });

    SimulateArgs sa;
    from_config(file, {"energy", "epsilon"}, sa.epsilon);
    from_config(file, {"energy", "q"}, sa.q);
    from_config(file, {"flow", "tau"}, sa.tau);
    from_config(file, {"flow", "t_end"}, sa.t_end);
    from_config(file, {"flow", "scheme"}, sa.scheme);
    from_config(file, {"flow", "inner_tol"}, sa.inner_tol);
    from_config(file, {"flow", "inner_max_iters"}, sa.inner_max_iters);
    from_config(file, {"simulate", "grid_n"}, sa.grid_n);
    from_config(file, {"simulate", "init"}, sa.init);
    from_config(file, {"simulate", "snap_stride"}, sa.snap_stride);
    from_config(file, {"simulate", "record_stride"}, sa.record_stride);
    from_config(file, {"seed"}, sa.seed);
    from_config(file, {"output_dir"}, sa.out);
    auto* s_cmd = app.add_subcommand("simulate", "run the gradient flow");
    s_cmd->add_option("--epsilon", sa.epsilon, "interface scale");
    s_cmd->add_option("--q", sa.q, "gradient coefficient q");
    s_cmd->add_option("--tau", sa.tau, "time step");
    s_cmd->add_option("--t-end", sa.t_end, "final time");
    s_cmd->add_option("--scheme", sa.scheme, "mm or si");
    auto* grid_opt = s_cmd->add_option("--grid-n", sa.grid_n, "torus nodes (power of two)");
    s_cmd->add_option("--init", sa.init,
                      "two-interface | constant:<v> | random:<modes> | <csv path>");
    s_cmd->add_option("--snap-stride", sa.snap_stride, "snapshot stride (0 = none)");
    s_cmd->add_option("--record-stride", sa.record_stride, "scalar series stride");
    s_cmd->add_option("--inner-tol", sa.inner_tol, "movement subproblem tolerance");
    s_cmd->add_option("--inner-max-iters", sa.inner_max_iters, "movement subproblem budget");
    s_cmd->add_option("--seed", sa.seed, "seed for random initial data");
    s_cmd->add_option("--out", sa.out, "output directory");
    s_cmd->callback(
        [&]() { set_parallelism(parallelism_degree); exit_code = run_simulate(spec, sa, grid_opt->count() > 0); });

    M1Args ma;
    from_config(file, {"m1", "q"}, ma.q);
    from_config(file, {"m1", "L"}, ma.L);
    from_config(file, {"m1", "n"}, ma.n);
    from_config(file, {"output_dir"}, ma.out);
    auto* m_cmd = app.add_subcommand("m1", "optimal transition energy");
    m_cmd->add_option("--q", ma.q, "gradient coefficient q");
    m_cmd->add_option("--L", ma.L, "half-width of the transition interval");
    m_cmd->add_option("--n", ma.n, "cells at the base resolution");
    m_cmd->add_option("--out", ma.out, "output directory");
    m_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_m1(spec, ma); });

    ProfileArgs pa;
    from_config(file, {"profile", "length"}, pa.length);
    from_config(file, {"profile", "cells"}, pa.cells);
    from_config(file, {"profile", "epsilon"}, pa.epsilon);
    from_config(file, {"profile", "q"}, pa.q);
    from_config(file, {"profile", "constraint"}, pa.constraint);
    from_config(file, {"profile", "well"}, pa.well);
    from_config(file, {"profile", "alpha"}, pa.alpha);
    from_config(file, {"profile", "beta"}, pa.beta);
    from_config(file, {"profile", "init"}, pa.init);
    from_config(file, {"output_dir"}, pa.out);
    auto* p_cmd = app.add_subcommand("minimize-profile", "interval energy minimizer");
    p_cmd->add_option("--length", pa.length, "interval length");
    p_cmd->add_option("--cells", pa.cells, "grid cells");
    p_cmd->add_option("--epsilon", pa.epsilon, "interface scale (1 = rescaled units)");
    p_cmd->add_option("--q", pa.q, "gradient coefficient q");
    p_cmd->add_option("--constraint", pa.constraint, "zero-dirichlet or clamped");
    p_cmd->add_option("--well", pa.well, "clamped: well sign (+1 or -1)");
    p_cmd->add_option("--alpha", pa.alpha, "clamped: left (offset,slope)");
    p_cmd->add_option("--beta", pa.beta, "clamped: right (offset,slope)");
    p_cmd->add_option("--init", pa.init, "initial guess CSV");
    p_cmd->add_option("--out", pa.out, "output directory");
    p_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_profile(spec, pa); });

    MidpointArgs mda;
    from_config(file, {"midpoint", "q"}, mda.q);
    from_config(file, {"midpoint", "ratios"}, mda.ratios);
    from_config(file, {"output_dir"}, mda.out);
    auto* md_cmd = app.add_subcommand("midpoint-decay", "midpoint distance decay sweep");
    md_cmd->add_option("--q", mda.q, "gradient coefficient q");
    md_cmd->add_option("--ratios", mda.ratios, "d/eps list or start:stop:count");
    md_cmd->add_option("--out", mda.out, "output directory");
    md_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_midpoint(spec, mda); });

    BoundArgs ba;
    from_config(file, {"bound", "q"}, ba.q);
    from_config(file, {"bound", "zeros"}, ba.zeros);
    from_config(file, {"bound", "eps"}, ba.eps);
    from_config(file, {"bound", "min_zero_spacing"}, ba.min_zero_spacing);
    from_config(file, {"output_dir"}, ba.out);
    auto* b_cmd = app.add_subcommand("bound-sweep", "glued-minimizer energy defect sweep");
    b_cmd->add_option("--q", ba.q, "gradient coefficient q");
    b_cmd->add_option("--zeros", ba.zeros, "torus zero layout");
    b_cmd->add_option("--eps", ba.eps, "eps list or start:stop:count");
    b_cmd->add_option("--min-zero-spacing", ba.min_zero_spacing, "smallest admissible gap");
    b_cmd->add_option("--out", ba.out, "output directory");
    b_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_bound(spec, ba); });

    SlowMotionArgs sma;
    from_config(file, {"slow_motion", "jumps"}, sma.jumps);
    from_config(file, {"slow_motion", "delta"}, sma.delta);
    from_config(file, {"slow_motion", "threshold"}, sma.threshold);
    from_config(file, {"slow_motion", "eps"}, sma.eps);
    from_config(file, {"slow_motion", "q"}, sma.q);
    from_config(file, {"slow_motion", "scheme"}, sma.scheme);
    from_config(file, {"slow_motion", "h"}, sma.h_mode);
    from_config(file, {"slow_motion", "power_exponent"}, sma.power_exponent);
    from_config(file, {"slow_motion", "budget_seconds"}, sma.budget_seconds);
    from_config(file, {"slow_motion", "grid_n"}, sma.grid_n);
    from_config(file, {"slow_motion", "tau"}, sma.tau);
    from_config(file, {"slow_motion", "t_prep"}, sma.t_prep);
    from_config(file, {"slow_motion", "check_interval"}, sma.check_interval);
    from_config(file, {"slow_motion", "t_end_initial"}, sma.t_end_initial);
    from_config(file, {"slow_motion", "t_max"}, sma.t_max);
    from_config(file, {"slow_motion", "interface_offset"}, sma.offset);
    from_config(file, {"slow_motion", "m1_L"}, sma.m1_L);
    from_config(file, {"slow_motion", "m1_n"}, sma.m1_n);
    from_config(file, {"output_dir"}, sma.out);
    auto* sm_cmd = app.add_subcommand("slow-motion", "departure-time sweep");
    sm_cmd->add_option("--jumps", sma.jumps, "jump locations on the torus");
    sm_cmd->add_option("--delta", sma.delta, "L1 closeness target");
    sm_cmd->add_option("--threshold", sma.threshold, "departure threshold (default: delta)");
    sm_cmd->add_option("--eps", sma.eps, "eps list or start:stop:count");
    sm_cmd->add_option("--q", sma.q, "gradient coefficient q");
    sm_cmd->add_option("--scheme", sma.scheme, "mm or si");
    sm_cmd->add_option("--h-mode", sma.h_mode, "preparation scale: exp-d-gamma or power");
    sm_cmd->add_option("--power-exponent", sma.power_exponent, "k for h(eps)=eps^-k");
    sm_cmd->add_option("--budget-seconds", sma.budget_seconds,
                       "wall-clock cap per run (0 = off; binding caps are machine-dependent)");
    sm_cmd->add_option("--grid-n", sma.grid_n, "torus nodes");
    sm_cmd->add_option("--tau", sma.tau, "time step");
    sm_cmd->add_option("--t-prep", sma.t_prep, "relaxation horizon for the initial data");
    sm_cmd->add_option("--check-interval", sma.check_interval, "departure check cadence");
    sm_cmd->add_option("--t-end-initial", sma.t_end_initial, "first horizon before doubling");
    sm_cmd->add_option("--t-max", sma.t_max, "simulated-time ceiling");
    sm_cmd->add_option("--offset", sma.offset, "first-jump displacement seeding motion");
    sm_cmd->add_option("--m1-L", sma.m1_L, "transition-energy half-width");
    sm_cmd->add_option("--m1-n", sma.m1_n, "transition-energy base cells");
    sm_cmd->add_option("--out", sma.out, "output directory");
    sm_cmd->callback([&]() { set_parallelism(parallelism_degree); exit_code = run_slow_motion(spec, sma); });

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      return report_error("config", e.what(), 2);
    }

    return exit_code;
  } catch (const std::invalid_argument& e) {
    return report_error("config", e.what(), 2);
  } catch (const std::domain_error& e) {
    return report_error("config", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error("numerical", e.what(), 3);
  }
}

}  // namespace shlab
