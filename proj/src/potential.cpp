#include "shlab/potential.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/core.h>

namespace shlab {

PotentialSpec PotentialSpec::prototype() {
  PotentialSpec spec;
  spec.kind = PotentialKind::prototype_quartic;
  spec.coeffs = {0.25, -0.5, 0.25};
  spec.c_w = 0.25;
  spec.w2_at_1 = 2.0;
  return spec;
}

PotentialSpec PotentialSpec::even_polynomial(std::vector<double> coeffs, double c_w) {
  PotentialSpec spec;
  spec.kind = PotentialKind::even_polynomial;
  spec.coeffs = std::move(coeffs);
  spec.c_w = c_w;
  // W''(s) = sum_k c_k (2k)(2k-1) s^(2k-2) evaluated at s = 1.
  double w2 = 0.0;
  for (size_t k = 1; k < spec.coeffs.size(); ++k) {
    w2 += spec.coeffs[k] * static_cast<double>(2 * k) * static_cast<double>(2 * k - 1);
  }
  spec.w2_at_1 = w2;
  return spec;
}

namespace {

template <typename Real>
Real eval_potential_impl(const PotentialSpec& spec, Real s, int order) {
  const Real y = s * s;
  // Horner in y = s^2 for w(y), w'(y), w''(y).
  Real w = 0, w1 = 0, w2 = 0;
  for (size_t i = spec.coeffs.size(); i-- > 0;) {
    w2 = w2 * y + Real(2) * w1;
    w1 = w1 * y + w;
    w = w * y + Real(spec.coeffs[i]);
  }
  switch (order) {
    case 0:
      return w;
    case 1:
      return Real(2) * s * w1;
    case 2:
      return Real(4) * y * w2 + Real(2) * w1;
    default:
      throw std::invalid_argument(fmt::format("eval_potential: order {} not in 0..2", order));
  }
}

}  // namespace

double eval_potential(const PotentialSpec& spec, double s, int order) {
  return eval_potential_impl<double>(spec, s, order);
}

long double eval_potential_ld(const PotentialSpec& spec, long double s, int order) {
  return eval_potential_impl<long double>(spec, s, order);
}

ValidationReport validate_hypotheses(const PotentialSpec& spec, int n_samples, double s_max) {
  if (n_samples < 100) {
    throw std::invalid_argument("validate_hypotheses: n_samples must be >= 100");
  }
  if (s_max < 2.0) {
    throw std::invalid_argument("validate_hypotheses: s_max must be >= 2");
  }

  const double ds = s_max / (n_samples - 1);
  double sym_worst = 0.0;
  double pos_worst = std::numeric_limits<double>::infinity();
  double growth_worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double s = i * ds;
    const double w = eval_potential(spec, s, 0);
    sym_worst = std::max(sym_worst, std::abs(w - eval_potential(spec, -s, 0)));
    if (std::abs(s - 1.0) > 10.0 * ds) {
      pos_worst = std::min(pos_worst, w);
    }
    growth_worst = std::min(growth_worst, w - spec.c_w * (s - 1.0) * (s - 1.0));
  }
  const double well_value = std::abs(eval_potential(spec, 1.0, 0));
  const double well_slope = std::abs(eval_potential(spec, 1.0, 1));

  ValidationReport report;
  report.checks.push_back({"even symmetry", sym_worst <= 1e-12, sym_worst});
  report.checks.push_back({"positive away from wells", pos_worst > 0.0, pos_worst});
  report.checks.push_back(
      {"well conditions W(1)=W'(1)=0", std::max(well_value, well_slope) <= 1e-12,
       std::max(well_value, well_slope)});
  report.checks.push_back({"quadratic growth with c_w", growth_worst >= -1e-12 && spec.c_w > 0.0 &&
                                                            spec.c_w <= 1.0,
                           growth_worst});
  report.all_pass = true;
  for (const auto& c : report.checks) {
    report.all_pass = report.all_pass && c.pass;
  }
  return report;
}

LinearizationConstants linearization(const PotentialSpec& spec, double q) {
  const double s_bar = std::sqrt(2.0 * spec.w2_at_1);
  if (!(q < s_bar) || !(q > -s_bar)) {
    throw std::domain_error(fmt::format(
        "linearization: q = {0} must lie in (-{1:.17g}, {1:.17g}) = (-sqrt(2 W''(1)), "
        "sqrt(2 W''(1))) for roots of the form +-gamma +- i delta",
        q, s_bar));
  }
  LinearizationConstants consts;
  consts.q = q;
  consts.gamma = 0.5 * std::sqrt(s_bar - q);
  consts.delta = 0.5 * std::sqrt(s_bar + q);

  // 2r^4 + 2q r^2 + W''(1) = 0 as a quadratic in y = r^2.
  const std::complex<double> disc(q * q - 2.0 * spec.w2_at_1, 0.0);
  const std::complex<double> sqrt_disc = std::sqrt(disc);
  const std::complex<double> y_plus = (-q + sqrt_disc) / 2.0;
  const std::complex<double> y_minus = (-q - sqrt_disc) / 2.0;
  const std::complex<double> r0 = std::sqrt(y_plus);
  const std::complex<double> r1 = std::sqrt(y_minus);
  std::array<std::complex<double>, 4> numeric = {r0, -r0, r1, -r1};

  // Order the numeric roots as {g+di, g-di, -g+di, -g-di} by matching the closed form.
  const std::complex<double> i_unit(0.0, 1.0);
  std::array<std::complex<double>, 4> closed = {
      consts.gamma + consts.delta * i_unit, consts.gamma - consts.delta * i_unit,
      -consts.gamma + consts.delta * i_unit, -consts.gamma - consts.delta * i_unit};
  std::array<bool, 4> used{};
  for (int c = 0; c < 4; ++c) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int n = 0; n < 4; ++n) {
      if (used[n]) continue;
      const double dist = std::abs(closed[c] - numeric[n]);
      if (dist < best_dist) {
        best_dist = dist;
        best = n;
      }
    }
    used[best] = true;
    if (best_dist > 1e-10) {
      throw std::runtime_error(
          fmt::format("linearization: closed-form root {} is {} away from nearest quartic root",
                      c, best_dist));
    }
    consts.roots[c] = numeric[best];
  }
  return consts;
}

SternbergReport sternberg_check(const LinearizationConstants& consts, int order) {
  if (order != 2) {
    throw std::invalid_argument(
        fmt::format("sternberg_check: only order 2 is supported, got {}", order));
  }
  SternbergReport report;
  report.order_checked = order;

  double re_max_plus = 0.0, re_min_plus = std::numeric_limits<double>::infinity();
  double re_max_minus = 0.0, re_min_minus = std::numeric_limits<double>::infinity();
  for (const auto& r : consts.roots) {
    const double re = std::abs(r.real());
    if (r.real() > 0.0) {
      re_max_plus = std::max(re_max_plus, re);
      re_min_plus = std::min(re_min_plus, re);
    } else {
      re_max_minus = std::max(re_max_minus, re);
      re_min_minus = std::min(re_min_minus, re);
    }
  }
  report.spectral_spread_plus = re_max_plus / re_min_plus;
  report.spectral_spread_minus = re_max_minus / re_min_minus;

  const double tol = 1e-12 * std::max(1.0, std::abs(consts.gamma) + std::abs(consts.delta));
  bool holds = true;
  // All multi-indices m in N_0^4 with |m| = order.
  for (int m0 = 0; m0 <= order && holds; ++m0) {
    for (int m1 = 0; m0 + m1 <= order && holds; ++m1) {
      for (int m2 = 0; m0 + m1 + m2 <= order && holds; ++m2) {
        const int m3 = order - m0 - m1 - m2;
        const std::complex<double> sum = static_cast<double>(m0) * consts.roots[0] +
                                         static_cast<double>(m1) * consts.roots[1] +
                                         static_cast<double>(m2) * consts.roots[2] +
                                         static_cast<double>(m3) * consts.roots[3];
        for (const auto& lambda : consts.roots) {
          const std::complex<double> g = lambda - sum;
          if (std::abs(g) <= tol || std::abs(g.real()) <= tol) {
            holds = false;
            break;
          }
        }
      }
    }
  }
  report.condition_holds = holds;

  // Largest K >= 0 admitting a split order = M + N with M >= K*rho+ and N >= K*rho-.
  int best_k = 0;
  for (int m = 1; m < order; ++m) {
    const int n = order - m;
    const int k = static_cast<int>(std::floor(std::min(
        static_cast<double>(m) / report.spectral_spread_plus,
        static_cast<double>(n) / report.spectral_spread_minus)));
    best_k = std::max(best_k, k);
  }
  report.q_smoothness = best_k;
  return report;
}

}  // namespace shlab
