#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "shlab/energy.hpp"
#include "shlab/field.hpp"
#include "shlab/potential.hpp"
#include "shlab/profiles.hpp"

using namespace shlab;

namespace {

PotentialSpec proto() { return PotentialSpec::prototype(); }

// Zeros strictly inside the interval, at least two spacings from each end.
int interior_zero_count(const Field& f, double min_separation) {
  const double margin = 2.0 * f.grid.spacing();
  ZeroSet zeros = find_zeros(f, min_separation);
  int count = 0;
  for (double z : zeros.locations) {
    if (z > f.grid.a + margin && z < f.grid.b - margin) {
      ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("transition energy matches the frozen regression value") {
  ProfileConstants coarse = estimate_m1(0.0, proto(), 20.0, 4096);
  CHECK(coarse.m1 == doctest::Approx(0.74234418060363094).epsilon(1e-10));
  CHECK(coarse.m_plus / coarse.m1 == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(coarse.m_minus / coarse.m1 == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(coarse.truncation_gap <= 1e-6);

  ProfileConstants fine = estimate_m1(0.0, proto(), 40.0, 8192);
  CHECK(std::abs(fine.m1 - coarse.m1) <= 1e-6);
  // A longer interval admits a larger class, so the constrained value cannot rise.
  CHECK(fine.m1 <= coarse.m1 + 1e-12);

  // Any admissible profile upper-bounds the infimum.
  const double tanh_energy = 3.0 * std::sqrt(2.0) / 5.0;
  CHECK(coarse.m1 <= tanh_energy);
}

TEST_CASE("transition energy falls when the gradient term rewards oscillation") {
  ProfileConstants tilted = estimate_m1(0.1, proto(), 40.0, 8192);
  CHECK(tilted.m1 == doctest::Approx(0.65640263939676535).epsilon(1e-10));
  CHECK(tilted.m1 < 0.74234418060363094);
  CHECK(tilted.m_plus / tilted.m1 == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("transition-energy estimation rejects weak truncation setups") {
  CHECK_THROWS_AS(estimate_m1(0.0, proto(), 10.0, 4096), std::invalid_argument);
  CHECK_THROWS_AS(estimate_m1(0.0, proto(), 40.0, 2048), std::invalid_argument);
  CHECK_THROWS_AS(estimate_m1(0.0, proto(), 40.0, 4097), std::invalid_argument);
}

TEST_CASE("clamped minimizer with zero offsets is the well itself") {
  BoundaryData bdata;
  bdata.well = -1;
  MinimizerResult res = minimize_interval(Grid::interval(0.0, 0.5, 257),
                                          IntervalConstraint::clamped, bdata, {0.05, 0.0},
                                          proto(), {});
  CHECK(res.report.converged);
  for (double s : res.minimizer.samples) {
    CHECK(s == -1.0);
  }
  CHECK(res.report.energy == 0.0);
}

TEST_CASE("zero-dirichlet minimizer satisfies the interior equation and free ends") {
  MinimizerResult res = minimize_interval(Grid::interval(0.0, 0.5, 4097),
                                          IntervalConstraint::zero_dirichlet, {},
                                          {0.02, 0.0}, proto(), {});
  const ProfileReport& r = res.report;
  CHECK(r.converged);
  CHECK(r.iterations <= 10);
  CHECK(r.el_residual_sup <= 1e-6 / 0.02);
  CHECK(r.el_residual_sup <= 5e-9);
  CHECK(r.end_curvature_left <= 1e-6);
  CHECK(r.end_curvature_right <= 1e-6);

  const double mid = res.minimizer.samples[2048];
  const double dist = std::min(std::abs(mid - 1.0), std::abs(mid + 1.0));
  CHECK(dist == doctest::Approx(1.53288e-4).epsilon(1e-3));

  // Both half-transitions: the interval energy sits at the full-line constant.
  CHECK(r.energy == doctest::Approx(0.74234418060363094).epsilon(2e-3));

  // Well-selection: one interior branch, no zero strictly inside.
  CHECK(interior_zero_count(res.minimizer, 0.01) == 0);
}

TEST_CASE("zero-dirichlet branches are energy-equal mirrors") {
  Grid g = Grid::interval(0.0, 0.5, 1025);
  MinimizerResult free_branch = minimize_interval(g, IntervalConstraint::zero_dirichlet, {},
                                                  {0.05, 0.0}, proto(), {});
  Field flipped = free_branch.minimizer;
  for (double& s : flipped.samples) {
    s = -s;
  }
  MinimizerResult forced = minimize_interval(g, IntervalConstraint::zero_dirichlet, {},
                                             {0.05, 0.0}, proto(), flipped);
  CHECK(forced.report.energy == doctest::Approx(free_branch.report.energy).epsilon(1e-10));
}

TEST_CASE("decaying comparison profile meets its boundary data") {
  LinearizationConstants consts = linearization(proto(), 0.0);
  Grid g = Grid::interval(0.0, 40.0, 2049);

  Field flat = construct_eta(1.0, 0.0, +1, consts, g);
  for (double s : flat.samples) {
    CHECK(s == 1.0);
  }

  Field bumped = construct_eta(1.25, 0.0, +1, consts, g);
  CHECK(bumped.samples[0] == 1.25);
  Field d1 = derivative(bumped, 1);
  CHECK(std::abs(d1.samples[0]) <= 1e-4);
  CHECK(std::abs(bumped.samples[2048] - 1.0) <= 1e-10);
}

TEST_CASE("comparison profile rejects a vanishing oscillation frequency") {
  LinearizationConstants degenerate;
  degenerate.gamma = 0.7;
  degenerate.delta = 0.0;
  CHECK_THROWS_AS(construct_eta(1.1, 0.0, +1, degenerate, Grid::interval(0.0, 10.0, 64)),
                  DegenerateFrequencyError);
}

TEST_CASE("comparison-profile tail energy settles beyond five decay lengths") {
  LinearizationConstants consts = linearization(proto(), 0.0);
  double prev = 1e300;
  for (double length : {8.0, 12.0, 16.0, 20.0, 28.0, 40.0}) {
    const int n = static_cast<int>(length * 128) + 1;
    Field eta = construct_eta(1.05, -0.01, +1, consts, Grid::interval(0.0, length, n));
    const double e = energy_rescaled(eta, 0.0, proto()).total;
    CHECK(e <= prev + 1e-4 * (1.0 + std::abs(prev)));
    prev = e;
  }
}

TEST_CASE("midpoint distance decays at half the linearized rate") {
  MidpointDecayResult res = midpoint_decay_experiment({10, 15, 20, 25}, {1.0, 0.0}, proto());
  REQUIRE(res.rows.size() == 4);
  const double expected[] = {0.0550586106938, 0.00172858425997, 0.00153471132105,
                             0.00015328758283};
  for (int i = 0; i < 4; ++i) {
    CHECK(res.rows[i].distance == doctest::Approx(expected[i]).epsilon(1e-6));
    CHECK_FALSE(res.rows[i].excluded);
    // Symmetry about the midpoint kills the odd derivatives there.
    CHECK(res.rows[i].deriv1 == 0.0);
    CHECK(res.rows[i].deriv3 == 0.0);
    CHECK(res.rows[i].deriv2 > 0.0);
  }
  CHECK(res.fit.slope == doctest::Approx(-0.355409).epsilon(1e-3));
  CHECK(res.fit.r_squared == doctest::Approx(0.894503).epsilon(1e-3));
  // The slope clears the 15% band around -gamma/2 even though the fit is oscillatory.
  CHECK(std::abs(res.fit.slope - (-0.5 * 0.70710678118654757)) <=
        0.15 * 0.5 * 0.70710678118654757);
}

TEST_CASE("midpoint decay tracks the tilted linearization rate") {
  MidpointDecayResult res = midpoint_decay_experiment({10, 15, 20, 25}, {1.0, 0.1}, proto());
  const double target = -0.5 * 0.68920243760451105;
  CHECK(res.fit.slope == doctest::Approx(-0.343203).epsilon(1e-3));
  CHECK(std::abs(res.fit.slope - target) <= 0.15 * std::abs(target));
}

TEST_CASE("midpoint experiment rejects thin ratio grids") {
  CHECK_THROWS_AS(midpoint_decay_experiment({10, 15, 20}, {1.0, 0.0}, proto()),
                  std::invalid_argument);
  CHECK_THROWS_AS(midpoint_decay_experiment({10, 12, 14, 18}, {1.0, 0.0}, proto()),
                  std::invalid_argument);
}

TEST_CASE("glued comparison profiles decay at the full linearized rate") {
  EtaDecayResult res = eta_decay_experiment({10, 15, 20, 25}, {1.0, 0.0}, proto());
  REQUIRE(res.rows.size() == 4);
  const double expected[] = {0.00443049173536, 4.22137526706e-6, 3.32794989237e-6,
                             3.32335882036e-8};
  const double mids[] = {1.05506, 0.998271, 0.998465, 1.00015};
  for (int i = 0; i < 4; ++i) {
    CHECK(res.rows[i].tail_energy == doctest::Approx(expected[i]).epsilon(1e-5));
    CHECK(res.rows[i].mid_value == doctest::Approx(mids[i]).epsilon(1e-4));
  }
  CHECK(res.fit.slope == doctest::Approx(-0.712784).epsilon(1e-3));
  CHECK(std::abs(res.fit.slope - (-0.70710678118654757)) <= 0.15 * 0.70710678118654757);
}

TEST_CASE("glued-field energies defect toward the transition-count limit") {
  LinearizationConstants lin = linearization(proto(), 0.0);
  LowerBoundResult res = lower_bound_experiment({0.0, 0.5}, {0.01, 0.015, 0.02, 0.025, 0.03},
                                                {1.0, 0.0}, proto(), lin, 0.1);
  REQUIRE(res.rows.size() == 5);
  CHECK(res.n_zeros == 2);
  CHECK(res.m1_matched == doctest::Approx(0.74234416336236597).epsilon(1e-10));

  const double defects[] = {-2.42481815876e-15, -1.12250597272e-11, 5.67007485831e-8,
                            1.56337410505e-7, 3.94551470938e-5};
  const bool saturated[] = {true, true, false, false, false};
  for (int i = 0; i < 5; ++i) {
    CHECK(res.rows[i].saturated == saturated[i]);
    if (res.rows[i].saturated) {
      CHECK(res.rows[i].defect <= 0.0);
    } else {
      CHECK(res.rows[i].defect == doctest::Approx(defects[i]).epsilon(1e-4));
    }
    // Defect is the bookkeeping difference by definition.
    CHECK(res.rows[i].defect ==
          doctest::Approx(2.0 * res.m1_matched - res.rows[i].energy).epsilon(1e-9));
  }
  CHECK(res.fit.slope == doctest::Approx(-0.739439).epsilon(1e-3));
  CHECK(res.envelope_c == doctest::Approx(2.5905).epsilon(1e-3));
  CHECK(res.intercept_c == doctest::Approx(2.81223).epsilon(1e-3));
}

TEST_CASE("the fitted envelope predicts four-transition energies") {
  LinearizationConstants lin = linearization(proto(), 0.0);
  LowerBoundResult two = lower_bound_experiment({0.0, 0.5}, {0.01, 0.015, 0.02, 0.025, 0.03},
                                                {1.0, 0.0}, proto(), lin, 0.1);
  LowerBoundResult four = lower_bound_experiment({0.0, 0.25, 0.5, 0.75},
                                                 {0.01, 0.0125, 0.015}, {1.0, 0.0}, proto(),
                                                 lin, 0.1);
  CHECK(four.n_zeros == 4);
  for (const GluedEnergySample& row : four.rows) {
    const double bound =
        4.0 * two.m1_matched - 4.0 * two.envelope_c * std::exp(-lin.gamma * 0.25 / row.eps);
    CHECK(row.energy >= bound);
  }
}

TEST_CASE("glued-field experiment rejects tight zero layouts") {
  LinearizationConstants lin = linearization(proto(), 0.0);
  CHECK_THROWS_AS(lower_bound_experiment({0.0, 0.05}, {0.01, 0.015, 0.02}, {1.0, 0.0},
                                         proto(), lin, 0.1),
                  std::invalid_argument);
}

TEST_CASE("clamped minimizers respond linearly to small boundary offsets") {
  FitResult fit = clamped_deviation_sweep({0.04, 0.02, 0.01}, 0.0, proto(), 0.05);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.r_squared >= 1.0 - 1e-10);
  CHECK(std::abs(fit.intercept) <= 1e-10);
}

TEST_CASE("clamped sweep rejects offsets beyond the small-data regime") {
  CHECK_THROWS_AS(clamped_deviation_sweep({0.06, 0.02, 0.01}, 0.0, proto(), 0.05),
                  std::invalid_argument);
}

TEST_CASE("bad-set measure of interval minimizers grows linearly in the scale") {
  BadSetSweepResult res = bad_set_sweep({0.02, 0.04, 0.08}, 0.1, 0.0, proto());
  REQUIRE(res.rows.size() == 3);
  CHECK(res.rows[0].measure == doctest::Approx(0.1123046875).epsilon(1e-12));
  CHECK(res.rows[1].measure == doctest::Approx(0.22412109375).epsilon(1e-12));
  CHECK(res.rows[2].measure == doctest::Approx(0.447265625).epsilon(1e-12));
  CHECK(res.fit.slope == doctest::Approx(5.5821).epsilon(1e-3));
  CHECK(res.fit.r_squared >= 0.9999);
  CHECK(res.c1 == doctest::Approx(5.61523).epsilon(1e-3));
}
