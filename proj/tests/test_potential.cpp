#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "shlab/potential.hpp"

using namespace shlab;

TEST_CASE("prototype evaluates the quartic well and its derivatives") {
  PotentialSpec spec = PotentialSpec::prototype();
  CHECK(eval_potential(spec, 1.0, 0) == 0.0);
  CHECK(eval_potential(spec, 0.0, 0) == 0.25);
  CHECK(eval_potential(spec, 1.0, 2) == 2.0);
  CHECK(eval_potential(spec, -1.0, 0) == 0.0);
  CHECK(eval_potential(spec, 1.0, 1) == 0.0);
  CHECK(eval_potential(spec, 2.0, 0) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(eval_potential(spec, 0.5, 1) == doctest::Approx(0.5 * 0.25 - 0.5).epsilon(1e-15));
  CHECK_THROWS_AS(eval_potential(spec, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(eval_potential(spec, 0.0, -1), std::invalid_argument);
}

TEST_CASE("long-double evaluation agrees with double at double precision") {
  PotentialSpec spec = PotentialSpec::prototype();
  for (double s : {-2.0, -0.3, 0.0, 0.7, 1.0, 1.31, 2.9}) {
    for (int order : {0, 1, 2}) {
      const double d = eval_potential(spec, s, order);
      const long double ld = eval_potential_ld(spec, static_cast<long double>(s), order);
      CHECK(std::abs(d - static_cast<double>(ld)) <=
            1e-15 * std::max(1.0, std::abs(d)));
    }
  }
}

TEST_CASE("hypothesis validation passes the prototype") {
  ValidationReport report = validate_hypotheses(PotentialSpec::prototype(), 1000, 3.0);
  REQUIRE(report.checks.size() == 4);
  for (const auto& check : report.checks) {
    CHECK(check.pass);
  }
  CHECK(report.all_pass);
  // Growth margin is exact zero at s = 0 where W(s) = c_w (s-1)^2 is attained.
  CHECK(report.checks[3].margin >= -1e-12);
}

TEST_CASE("a constant shift breaks only the well conditions") {
  PotentialSpec shifted = PotentialSpec::even_polynomial({1.1, -2.0, 1.0}, 1.0);
  ValidationReport report = validate_hypotheses(shifted, 1000, 3.0);
  REQUIRE(report.checks.size() == 4);
  CHECK(report.checks[0].pass);
  CHECK_FALSE(report.checks[2].pass);
  CHECK(report.checks[2].margin == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(report.checks[1].pass);
  CHECK(report.checks[3].pass);
  CHECK_FALSE(report.all_pass);
}

TEST_CASE("declared growth constants are checked by dense sampling") {
  // For (s^2-1)^2 the infimum of W(s)/(s-1)^2 on [0,3] is 1, so 0.5 clears it.
  ValidationReport wide =
      validate_hypotheses(PotentialSpec::even_polynomial({1.0, -2.0, 1.0}, 0.5), 1000, 3.0);
  CHECK(wide.all_pass);

  // For the prototype the same infimum is 0.25, attained at s = 0.
  PotentialSpec bad = PotentialSpec::prototype();
  bad.c_w = 0.5;
  ValidationReport report = validate_hypotheses(bad, 1000, 3.0);
  CHECK_FALSE(report.checks[3].pass);
  CHECK(report.checks[3].margin == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK_FALSE(report.all_pass);
}

TEST_CASE("validation rejects degenerate sampling parameters") {
  CHECK_THROWS_AS(validate_hypotheses(PotentialSpec::prototype(), 99, 3.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_hypotheses(PotentialSpec::prototype(), 1000, 1.5),
                  std::invalid_argument);
}

TEST_CASE("linearization at q = 0 gives the fourth roots of -1 scaled") {
  LinearizationConstants consts = linearization(PotentialSpec::prototype(), 0.0);
  CHECK(consts.gamma == 0.5 * std::sqrt(2.0));
  CHECK(consts.delta == 0.5 * std::sqrt(2.0));
  for (const auto& root : consts.roots) {
    CHECK(std::abs(std::abs(root.real()) - consts.gamma) <= 1e-14);
    CHECK(std::abs(std::abs(root.imag()) - consts.delta) <= 1e-14);
  }
}

TEST_CASE("linearization matches the quartic-root oracle at q = 0.1") {
  LinearizationConstants consts = linearization(PotentialSpec::prototype(), 0.1);
  CHECK(consts.gamma == doctest::Approx(0.68920243760451105).epsilon(1e-14));
  CHECK(consts.delta == doctest::Approx(0.72456883730947197).epsilon(1e-14));
}

TEST_CASE("linearization rejects q at or beyond the real-decay bound") {
  CHECK_THROWS_AS(linearization(PotentialSpec::prototype(), 2.5), std::domain_error);
  CHECK_THROWS_AS(linearization(PotentialSpec::prototype(), 2.0), std::domain_error);
  CHECK_THROWS_AS(linearization(PotentialSpec::prototype(), -2.0), std::domain_error);
  CHECK_THROWS_AS(linearization(PotentialSpec::prototype(), -3.0), std::domain_error);
  CHECK_NOTHROW(linearization(PotentialSpec::prototype(), 1.99));
  CHECK_NOTHROW(linearization(PotentialSpec::prototype(), -1.99));
}

TEST_CASE("characteristic roots satisfy the quartic and match the closed form") {
  PotentialSpec spec = PotentialSpec::prototype();
  for (double q : {-1.0, -0.5, 0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5, 1.9}) {
    LinearizationConstants consts = linearization(spec, q);
    std::vector<std::complex<double>> expected = {
        {consts.gamma, consts.delta},
        {consts.gamma, -consts.delta},
        {-consts.gamma, consts.delta},
        {-consts.gamma, -consts.delta},
    };
    for (const auto& want : expected) {
      double best = 1e300;
      for (const auto& root : consts.roots) {
        best = std::min(best, std::abs(root - want));
      }
      CHECK(best <= 1e-10);
    }
    for (const auto& root : consts.roots) {
      const std::complex<double> r2 = root * root;
      const std::complex<double> value = 2.0 * r2 * r2 + 2.0 * q * r2 + spec.w2_at_1;
      CHECK(std::abs(value) <= 1e-10);
    }
  }
}

TEST_CASE("decay rate falls and frequency rises as the gradient term grows") {
  PotentialSpec spec = PotentialSpec::prototype();
  const std::vector<double> qs = {-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 1.9};
  for (std::size_t i = 1; i < qs.size(); ++i) {
    LinearizationConstants lo = linearization(spec, qs[i - 1]);
    LinearizationConstants hi = linearization(spec, qs[i]);
    CHECK(hi.gamma < lo.gamma);
    CHECK(hi.delta > lo.delta);
  }
}

TEST_CASE("golden linearization constants across the gradient coefficient") {
  PotentialSpec spec = PotentialSpec::prototype();
  struct Golden {
    double q;
    double gamma;
    double delta;
  };
  const Golden goldens[] = {
      {0.0, 0.70710678118654757, 0.70710678118654757},
      {0.05, 0.69821200218844703, 0.71589105316381763},
      {0.1, 0.68920243760451105, 0.72456883730947197},
      {0.2, 0.67082039324993692, 0.74161984870956632},
  };
  for (const Golden& g : goldens) {
    LinearizationConstants consts = linearization(spec, g.q);
    CHECK(consts.gamma == doctest::Approx(g.gamma).epsilon(1e-15));
    CHECK(consts.delta == doctest::Approx(g.delta).epsilon(1e-15));
  }
}

TEST_CASE("non-resonance holds at the hyperbolic point with unit spreads") {
  PotentialSpec spec = PotentialSpec::prototype();
  SUBCASE("symmetric case") {
    SternbergReport report = sternberg_check(linearization(spec, 0.0), 2);
    CHECK(report.condition_holds);
    CHECK(report.order_checked == 2);
    CHECK(report.q_smoothness == 1);
    CHECK(report.spectral_spread_plus == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(report.spectral_spread_minus == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("asymmetric case") {
    SternbergReport report = sternberg_check(linearization(spec, 0.1), 2);
    CHECK(report.condition_holds);
    CHECK(report.q_smoothness == 1);
  }
  SUBCASE("whole admissible range") {
    for (double q : {-1.9, -1.0, 0.0, 0.9, 1.5, 1.9}) {
      SternbergReport report = sternberg_check(linearization(spec, q), 2);
      CHECK(report.condition_holds);
      CHECK(report.spectral_spread_plus == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(report.spectral_spread_minus == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("non-resonance check rejects unsupported orders") {
  LinearizationConstants consts = linearization(PotentialSpec::prototype(), 0.0);
  CHECK_THROWS_AS(sternberg_check(consts, 3), std::invalid_argument);
  CHECK_THROWS_AS(sternberg_check(consts, 1), std::invalid_argument);
}
