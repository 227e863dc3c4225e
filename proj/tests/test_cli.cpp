#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "doctest.h"
#include "shlab/energy.hpp"
#include "shlab/field.hpp"
#include "shlab/json_io.hpp"

using namespace shlab;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::filesystem::path scratch_root() {
  static const std::filesystem::path root = [] {
    auto p = std::filesystem::temp_directory_path() /
             fmt::format("shlab-cli-tests-{}", static_cast<long>(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
  }();
  return root;
}

std::string fresh_dir(const std::string& tag) {
  static int counter = 0;
  const std::filesystem::path p = scratch_root() / fmt::format("{}_{}", tag, counter++);
  std::filesystem::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string dir = fresh_dir("io");
  const std::string out_path = dir + "/stdout.txt";
  const std::string err_path = dir + "/stderr.txt";
  std::string cmd = env_prefix;
  if (!cmd.empty()) {
    cmd += ' ';
  }
  cmd += fmt::format("{} {} > {} 2> {}", SHLAB_CLI_PATH, args, out_path, err_path);
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// Data rows of a CSV artifact: comment preamble and the header line skipped.
std::vector<std::string> csv_rows(const std::string& path) {
  std::vector<std::string> rows;
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

std::vector<std::string> split_cells(const std::string& row) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (pos <= row.size()) {
    std::size_t comma = row.find(',', pos);
    if (comma == std::string::npos) {
      comma = row.size();
    }
    cells.push_back(row.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return cells;
}

int count_files(const std::string& dir) {
  int n = 0;
  for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir)) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("constants reports the linearized decay and oscillation rates") {
  const std::string dir = fresh_dir("constants");
  CliResult r = run_cli(fmt::format("constants --q 0.1 --out {}", dir));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["gamma"].get<double>() == doctest::Approx(0.68920243760451105).epsilon(1e-15));
  CHECK(j["delta"].get<double>() == doctest::Approx(0.72456883730947197).epsilon(1e-15));
  CHECK(j["roots"].size() == 4);
  CHECK(j["sternberg"]["condition_holds"].get<bool>());
  CHECK(j.contains("schema_version"));
  CHECK(j["config"]["subcommand"] == "constants");
  CHECK(slurp(dir + "/constants.json") == r.out);

  CliResult at_zero = run_cli(fmt::format("constants --q 0 --out {}", fresh_dir("c0")));
  REQUIRE(at_zero.code == 0);
  OrderedJson j0 = OrderedJson::parse(at_zero.out);
  CHECK(j0["gamma"].get<double>() == 0.70710678118654757);
  CHECK(j0["delta"].get<double>() == 0.70710678118654757);
}

TEST_CASE("config files seed the defaults and flags override them") {
  const std::string dir = fresh_dir("config");
  const std::string cfg_path = dir + "/cfg.json";
  write_file_atomic(cfg_path, R"({"energy": {"q": 0.1}})");

  CliResult from_file =
      run_cli(fmt::format("constants --config {} --out {}", cfg_path, dir + "/a"));
  REQUIRE(from_file.code == 0);
  CHECK(OrderedJson::parse(from_file.out)["gamma"].get<double>() ==
        doctest::Approx(0.68920243760451105).epsilon(1e-15));

  CliResult overridden =
      run_cli(fmt::format("constants --config {} --q 0 --out {}", cfg_path, dir + "/b"));
  REQUIRE(overridden.code == 0);
  CHECK(OrderedJson::parse(overridden.out)["gamma"].get<double>() == 0.70710678118654757);

  write_file_atomic(dir + "/broken.json", "{not json");
  CliResult broken = run_cli(fmt::format("constants --config {}", dir + "/broken.json"));
  CHECK(broken.code == 2);
  CHECK(OrderedJson::parse(broken.err)["error"]["type"] == "config");

  write_file_atomic(dir + "/badtype.json", R"({"energy": {"q": "a string"}})");
  CliResult badtype = run_cli(fmt::format("constants --config {}", dir + "/badtype.json"));
  CHECK(badtype.code == 2);
  CHECK(OrderedJson::parse(badtype.err)["error"]["message"].get<std::string>().find(
            "energy.q") != std::string::npos);
}

TEST_CASE("validate-potential distinguishes passing and failing wells by exit code") {
  CliResult proto = run_cli(fmt::format("validate-potential --out {}", fresh_dir("vp")));
  REQUIRE(proto.code == 0);
  OrderedJson j = OrderedJson::parse(proto.out);
  CHECK(j["all_pass"].get<bool>());
  CHECK(j["checks"].size() == 4);

  const std::string dir = fresh_dir("vp-poly");
  write_file_atomic(dir + "/quartic.json",
                    R"({"potential": {"kind": "polynomial", "coeffs": [1.0, -2.0, 1.0], "c_w": 0.5}})");
  CliResult quartic = run_cli(
      fmt::format("validate-potential --config {} --out {}", dir + "/quartic.json", dir + "/a"));
  CHECK(quartic.code == 0);
  CHECK(OrderedJson::parse(quartic.out)["all_pass"].get<bool>());

  // The quarter-scaled coefficients cannot carry the same growth constant.
  write_file_atomic(dir + "/weak.json",
                    R"({"potential": {"kind": "polynomial", "coeffs": [0.25, -0.5, 0.25], "c_w": 0.5}})");
  CliResult weak = run_cli(
      fmt::format("validate-potential --config {} --out {}", dir + "/weak.json", dir + "/b"));
  CHECK(weak.code == 3);
  OrderedJson wj = OrderedJson::parse(weak.out);
  CHECK(wj["all_pass"].get<bool>() == false);

  write_file_atomic(dir + "/incomplete.json", R"({"potential": {"kind": "polynomial", "coeffs": [1.0, -2.0, 1.0]}})");
  CliResult incomplete = run_cli(
      fmt::format("validate-potential --config {}", dir + "/incomplete.json"));
  CHECK(incomplete.code == 2);
  CHECK(OrderedJson::parse(incomplete.err)["error"]["message"].get<std::string>().find(
            "c_w") != std::string::npos);
}

TEST_CASE("m1 reproduces the frozen transition energy") {
  CliResult r = run_cli(fmt::format("m1 --q 0 --L 20 --n 4096 --out {}", fresh_dir("m1")));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["m1"].get<double>() == doctest::Approx(0.74234418060363094).epsilon(1e-12));
  CHECK(j["m_plus"].get<double>() / j["m1"].get<double>() ==
        doctest::Approx(0.5).epsilon(2e-12));
  CHECK(j["truncation_gap"].get<double>() <= 1e-6);
  CHECK(j["grid_n"].get<int>() == 4096);
}

TEST_CASE("simulate writes the energy series, snapshots, zeros, and summary") {
  const std::string dir = fresh_dir("simulate");
  CliResult r = run_cli(
      fmt::format("simulate --epsilon 0.05 --q 0.1 --tau 1e-3 --t-end 0.01 --grid-n 256 "
                  "--init two-interface --snap-stride 5 --record-stride 2 --out {}",
                  dir));
  REQUIRE(r.code == 0);

  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["summary"]["steps"].get<long long>() == 10);
  CHECK(j["summary"]["time_final"].get<double>() == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(j["summary"]["energy_final"].get<double>() <=
        j["summary"]["energy_initial"].get<double>());
  CHECK(j["summary"]["mass_identity_residual"].is_null());  // snapshots are strided
  CHECK(j["summary"]["under_resolved"].get<bool>() == false);
  CHECK(slurp(dir + "/run.json") == r.out);

  const auto energy_rows = csv_rows(dir + "/energy.csv");
  CHECK(energy_rows.size() == 6);  // steps 0, 2, 4, 6, 8, 10
  const std::string energy_text = slurp(dir + "/energy.csv");
  CHECK(energy_text.find("t,total,potential,gradient,hessian,dissipation") !=
        std::string::npos);
  CHECK(energy_text.find("#") == 0);

  CHECK(count_files(dir + "/snapshots") == 3);  // steps 0, 5, 10

  OrderedJson zeros = OrderedJson::parse(slurp(dir + "/zeros.json"));
  REQUIRE(zeros["times"].size() == 3);
  for (const auto& c : zeros["counts"]) {
    CHECK(c.get<int>() == 2);
  }
}

TEST_CASE("simulate verifies the mean-value identity when every step is kept") {
  const std::string dir = fresh_dir("sim-mass");
  CliResult r = run_cli(
      fmt::format("simulate --epsilon 0.05 --q 0.1 --tau 1e-3 --t-end 5e-3 --grid-n 64 "
                  "--init constant:0.4 --snap-stride 1 --out {}",
                  dir));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  REQUIRE(j["summary"]["mass_identity_residual"].is_number());
  CHECK(j["summary"]["mass_identity_residual"].get<double>() <= 1e-12);

  OrderedJson zeros = OrderedJson::parse(slurp(dir + "/zeros.json"));
  for (const auto& c : zeros["counts"]) {
    CHECK(c.get<int>() == 0);  // a positive constant never crosses zero
  }
}

TEST_CASE("simulate reruns are byte-identical") {
  const std::string a = fresh_dir("rerun-a");
  const std::string b = fresh_dir("rerun-b");
  const std::string args =
      "simulate --epsilon 0.05 --q 0.1 --tau 1e-3 --t-end 5e-3 --grid-n 64 "
      "--init random:8 --seed 7 --record-stride 1 --out ";
  REQUIRE(run_cli(args + a).code == 0);
  REQUIRE(run_cli(args + b).code == 0);
  CHECK(slurp(a + "/energy.csv") == slurp(b + "/energy.csv"));
  CHECK(slurp(a + "/run.json") == slurp(b + "/run.json"));
}

TEST_CASE("simulate accepts a stored field and rejects a conflicting grid flag") {
  const std::string dir = fresh_dir("sim-csv");
  const Field f = make_field(Grid::torus(64), [](double x) {
    return 0.3 * std::sin(2.0 * std::numbers::pi * x);
  });
  const std::string field_path = dir + "/field.csv";
  write_file_atomic(field_path, field_to_csv(f, OrderedJson::object()));

  CliResult ok = run_cli(fmt::format(
      "simulate --tau 1e-3 --t-end 2e-3 --init {} --out {}", field_path, dir + "/run"));
  REQUIRE(ok.code == 0);
  CHECK(OrderedJson::parse(ok.out)["config"]["grid_n"].get<int>() == 64);

  CliResult conflict = run_cli(fmt::format(
      "simulate --tau 1e-3 --t-end 2e-3 --init {} --grid-n 128 --out {}", field_path,
      dir + "/bad"));
  CHECK(conflict.code == 2);
  OrderedJson err = OrderedJson::parse(conflict.err);
  CHECK(err["error"]["type"] == "config");
  CHECK(err["error"]["message"].get<std::string>().find("conflicts") != std::string::npos);
  CHECK(err["exit_code"].get<int>() == 2);

  const Field g = constant_field(Grid::interval(0.0, 1.0, 33), 0.5);
  const std::string interval_path = dir + "/interval.csv";
  write_file_atomic(interval_path, field_to_csv(g, OrderedJson::object()));
  CliResult wrong_topology = run_cli(fmt::format(
      "simulate --tau 1e-3 --t-end 2e-3 --init {} --out {}", interval_path, dir + "/ival"));
  CHECK(wrong_topology.code == 2);
  CHECK(OrderedJson::parse(wrong_topology.err)["error"]["message"].get<std::string>().find(
            "torus") != std::string::npos);
}

TEST_CASE("the energy subcommand matches the library on a stored field") {
  const std::string dir = fresh_dir("energy");
  const Field f = make_field(Grid::torus(256), [](double x) {
    return std::sin(2.0 * std::numbers::pi * x);
  });
  const std::string field_path = dir + "/field.csv";
  write_file_atomic(field_path, field_to_csv(f, OrderedJson::object()));

  CliResult r = run_cli(fmt::format("energy --input {} --epsilon 0.05 --q 0.1 --out {}",
                                    field_path, dir));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  const EnergyBreakdown direct = energy_eps(f, {0.05, 0.1}, PotentialSpec::prototype());
  CHECK(j["total"].get<double>() == direct.total);
  CHECK(j["gradient_term"].get<double>() == direct.gradient_term);
  CHECK(j["under_resolved"].get<bool>() == direct.under_resolved);

  CliResult missing_flag = run_cli("energy");
  CHECK(missing_flag.code == 2);
  OrderedJson err = OrderedJson::parse(missing_flag.err);
  CHECK(err["error"]["type"] == "config");
  CHECK(err["error"]["message"] == "energy: --input <csv> is required");

  CliResult missing_file = run_cli(fmt::format("energy --input {}", dir + "/nothing.csv"));
  CHECK(missing_file.code == 3);
  CHECK(OrderedJson::parse(missing_file.err)["error"]["type"] == "numerical");
}

TEST_CASE("minimize-profile solves the trivial clamped problem exactly") {
  const std::string dir = fresh_dir("profile");
  CliResult r = run_cli(
      fmt::format("minimize-profile --constraint clamped --well -1 --alpha 0,0 --beta 0,0 "
                  "--length 10 --cells 512 --out {}",
                  dir));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["converged"].get<bool>());
  CHECK(j["energy"].get<double>() == 0.0);
  CHECK(j["branch_sign"].get<int>() == -1);
  CHECK(slurp(dir + "/report.json") == r.out);

  const auto rows = csv_rows(dir + "/profile.csv");
  REQUIRE(rows.size() == 513);
  for (const std::string& row : {rows.front(), rows[256], rows.back()}) {
    const auto cells = split_cells(row);
    REQUIRE(cells.size() == 2);
    CHECK(std::stod(cells[1]) == -1.0);
  }
}

TEST_CASE("midpoint-decay emits the sweep table and a fit") {
  const std::string dir = fresh_dir("midpoint");
  CliResult r = run_cli(fmt::format("midpoint-decay --ratios 5,8,12,16 --out {}", dir));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["fit"]["slope"].get<double>() < 0.0);
  CHECK(j["fit"]["points"].size() == 4);

  const auto rows = csv_rows(dir + "/table.csv");
  REQUIRE(rows.size() == 4);
  for (const std::string& row : rows) {
    const auto cells = split_cells(row);
    REQUIRE(cells.size() == 7);
    CHECK(std::abs(std::stod(cells[3])) <= 1e-12);  // odd derivative, symmetric profile
  }

  CliResult bad_range = run_cli("midpoint-decay --ratios 10:25");
  CHECK(bad_range.code == 2);
}

TEST_CASE("bound-sweep reports positive defects and the matched transition energy") {
  const std::string dir = fresh_dir("bound");
  CliResult r = run_cli(fmt::format("bound-sweep --eps 0.02,0.025,0.03 --out {}", dir));
  REQUIRE(r.code == 0);
  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["m1_matched"].get<double>() == doctest::Approx(0.74234416336236597).epsilon(1e-9));
  CHECK(j["n_zeros"].get<int>() == 2);
  CHECK(j["fit"]["slope"].get<double>() < 0.0);

  const auto rows = csv_rows(dir + "/table.csv");
  REQUIRE(rows.size() == 3);
  double prev = 0.0;
  for (const std::string& row : rows) {
    const auto cells = split_cells(row);
    REQUIRE(cells.size() == 6);
    const double defect = std::stod(cells[3]);
    CHECK(defect > 0.0);
    CHECK(defect > prev);  // grows with eps
    CHECK(cells[5] == "0");
    prev = defect;
  }
}

TEST_CASE("slow-motion surfaces a binding budget as a partial result") {
  const std::string dir = fresh_dir("slowmotion");
  CliResult r = run_cli(
      fmt::format("slow-motion --eps 0.04,0.035,0.03,0.025 --budget-seconds 0.05 "
                  "--t-end-initial 0.5 --offset 0.045 --m1-L 20 --m1-n 4096 --out {}",
                  dir));
  CHECK(r.code == 4);
  OrderedJson j = OrderedJson::parse(r.out);
  CHECK(j["partial"].get<bool>());
  CHECK(j["m1"].get<double>() == doctest::Approx(0.74234418060363094).epsilon(1e-12));

  const auto rows = csv_rows(dir + "/departures.csv");
  REQUIRE(rows.size() == 4);
  for (const std::string& row : rows) {
    const auto cells = split_cells(row);
    REQUIRE(cells.size() == 15);
    CHECK(cells[2] == "nan");      // no departure observed
    CHECK(cells.back() == "1");    // budget hit
  }
}

TEST_CASE("slow-motion rejects malformed jump geometries before running") {
  CliResult odd = run_cli("slow-motion --jumps 0.2,0.5,0.8 --m1-L 20 --m1-n 4096");
  CHECK(odd.code == 2);
  OrderedJson err = OrderedJson::parse(odd.err);
  CHECK(err["error"]["type"] == "config");

  CliResult lone = run_cli("slow-motion --jumps 0.25 --m1-L 20 --m1-n 4096");
  CHECK(lone.code == 2);
}

TEST_CASE("usage errors and unknown names exit with the config code") {
  CliResult none = run_cli("");
  CHECK(none.code == 2);
  CliResult unknown = run_cli("frobnicate");
  CHECK(unknown.code == 2);
  CliResult badflag = run_cli("constants --no-such-flag 1");
  CHECK(badflag.code == 2);
  CliResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("relative output directories resolve against the output root") {
  const std::string root = fresh_dir("outroot");
  CliResult r = run_cli("constants --q 0 --out rel/spot",
                        fmt::format("SHLAB_OUTPUT_ROOT={}", root));
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(root + "/rel/spot/constants.json"));
}
