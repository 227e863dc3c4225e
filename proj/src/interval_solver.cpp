#include "shlab/interval_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace shlab {

namespace {

// Pentadiagonal symmetric LDL^T in long double. diag/sub1/sub2 hold A[i][i],
// A[i+1][i], A[i+2][i]. Returns false when a pivot is non-positive (A not SPD);
// the caller then inflates the damping and retries.
struct Penta {
  std::vector<long double> d, e1, e2;

  bool factor(const std::vector<long double>& diag, const std::vector<long double>& sub1,
              const std::vector<long double>& sub2) {
    const std::size_t m = diag.size();
    d.assign(m, 0.0L);
    e1.assign(m, 0.0L);
    e2.assign(m, 0.0L);
    for (std::size_t i = 0; i < m; ++i) {
      long double l2 = 0.0L, l1 = 0.0L;
      if (i >= 2) {
        l2 = sub2[i - 2] / d[i - 2];
      }
      if (i >= 1) {
        long double num = sub1[i - 1];
        if (i >= 2) {
          num -= l2 * d[i - 2] * e1[i - 1];
        }
        l1 = num / d[i - 1];
      }
      long double di = diag[i];
      if (i >= 1) {
        di -= l1 * l1 * d[i - 1];
      }
      if (i >= 2) {
        di -= l2 * l2 * d[i - 2];
      }
      if (!(di > 0.0L) || !std::isfinite(static_cast<double>(di))) {
        return false;
      }
      e1[i] = l1;
      e2[i] = l2;
      d[i] = di;
    }
    return true;
  }

  void solve(const std::vector<long double>& b, std::vector<long double>& x) const {
    const std::size_t m = b.size();
    x.assign(m, 0.0L);
    for (std::size_t i = 0; i < m; ++i) {
      long double y = b[i];
      if (i >= 1) y -= e1[i] * x[i - 1];
      if (i >= 2) y -= e2[i] * x[i - 2];
      x[i] = y;
    }
    for (std::size_t i = 0; i < m; ++i) {
      x[i] /= d[i];
    }
    for (std::size_t ii = m; ii-- > 0;) {
      if (ii + 1 < m) x[ii] -= e1[ii + 1] * x[ii + 1];
      if (ii + 2 < m) x[ii] -= e2[ii + 2] * x[ii + 2];
    }
  }
};

struct State {
  const IntervalProblem* prob = nullptr;
  int n = 0;
  long double h = 0.0L;
  long double q = 0.0L;
  bool left_clamped = false, right_clamped = false;
  long double w_left = 0.0L, w_right = 0.0L;
  long double c_left = 0.0L, c_right = 0.0L;  // w1 = c_left + w2/4, w_{n-1} = c_right + w_{n-2}/4
  int first_free = 1, last_free = 0;
  int m = 0;

  std::vector<long double> w;  // full nodes

  void rebuild(const std::vector<long double>& x) {
    w[0] = w_left;
    w[n] = w_right;
    for (int k = 0; k < m; ++k) {
      w[first_free + k] = x[k];
    }
    if (left_clamped) {
      w[1] = c_left + 0.25L * w[2];
    }
    if (right_clamped) {
      w[n - 1] = c_right + 0.25L * w[n - 2];
    }
  }

  // Energy, folded free gradient, and residual density sup at the current w.
  void evaluate(long double& energy, std::vector<long double>& g_free, long double& gsup) const {
    const auto& spec = prob->potential;
    const long double inv_h = 1.0L / h;
    long double sum_w = 0.0L, sum_d1 = 0.0L, sum_d2 = 0.0L;
    std::vector<long double> d1(n), d2(n + 1, 0.0L);
    for (int i = 0; i < n; ++i) {
      d1[i] = (w[i + 1] - w[i]) * inv_h;
      sum_d1 += d1[i] * d1[i];
    }
    for (int i = 1; i < n; ++i) {
      d2[i] = (d1[i] - d1[i - 1]) * inv_h;
      sum_d2 += d2[i] * d2[i];
    }
    for (int i = 0; i <= n; ++i) {
      const long double theta = (i == 0 || i == n) ? 0.5L : 1.0L;
      sum_w += theta * eval_potential_ld(spec, w[i], 0);
    }
    energy = h * (sum_w - q * sum_d1 + sum_d2);

    std::vector<long double> g(n + 1, 0.0L);
    for (int j = 1; j < n; ++j) {
      g[j] = h * eval_potential_ld(spec, w[j], 1) + 2.0L * q * (d1[j] - d1[j - 1]) +
             2.0L * inv_h * (d2[j - 1] - 2.0L * d2[j] + d2[j + 1]);
    }
    g_free.assign(m, 0.0L);
    for (int k = 0; k < m; ++k) {
      g_free[k] = g[first_free + k];
    }
    if (left_clamped) {
      g_free[0] += 0.25L * g[1];
    }
    if (right_clamped) {
      g_free[m - 1] += 0.25L * g[n - 1];
    }
    gsup = 0.0L;
    for (const long double gk : g_free) {
      const long double a = (gk < 0.0L ? -gk : gk) * inv_h;
      gsup = std::max(gsup, a);
    }
  }

  void hessian(std::vector<long double>& diag, std::vector<long double>& sub1,
               std::vector<long double>& sub2) const {
    const auto& spec = prob->potential;
    const long double inv_h = 1.0L / h;
    const long double inv_h3 = inv_h * inv_h * inv_h;
    std::vector<long double> fd(n + 1, 0.0L), f1(n, 0.0L), f2(n - 1, 0.0L);
    for (int i = 0; i <= n; ++i) {
      const long double theta = (i == 0 || i == n) ? 0.5L : 1.0L;
      fd[i] = h * theta * eval_potential_ld(spec, w[i], 2);
    }
    for (int i = 0; i < n; ++i) {
      fd[i] += -2.0L * q * inv_h;
      fd[i + 1] += -2.0L * q * inv_h;
      f1[i] += 2.0L * q * inv_h;
    }
    for (int i = 1; i < n; ++i) {
      fd[i - 1] += 2.0L * inv_h3;
      fd[i] += 8.0L * inv_h3;
      fd[i + 1] += 2.0L * inv_h3;
      f1[i - 1] += -4.0L * inv_h3;
      f1[i] += -4.0L * inv_h3;
      f2[i - 1] += 2.0L * inv_h3;
    }
    diag.assign(m, 0.0L);
    sub1.assign(std::max(m - 1, 0), 0.0L);
    sub2.assign(std::max(m - 2, 0), 0.0L);
    for (int k = 0; k < m; ++k) {
      diag[k] = fd[first_free + k];
      if (k + 1 < m) sub1[k] = f1[first_free + k];
      if (k + 2 < m) sub2[k] = f2[first_free + k];
    }
    if (left_clamped) {
      diag[0] += 0.5L * f1[1] + 0.0625L * fd[1];
      sub1[0] += 0.25L * f2[1];
    }
    if (right_clamped) {
      diag[m - 1] += 0.5L * f1[n - 2] + 0.0625L * fd[n - 1];
      sub1[m - 2] += 0.25L * f2[n - 3];
    }
  }
};

}  // namespace

long double interval_energy_ld(const PotentialSpec& spec, double q, long double h,
                               const std::vector<double>& samples) {
  if (samples.size() < 3) {
    throw std::invalid_argument("interval_energy_ld: need at least 3 samples");
  }
  if (!(h > 0.0L)) {
    throw std::invalid_argument("interval_energy_ld: spacing must be positive");
  }
  const std::size_t n = samples.size() - 1;
  const long double inv_h = 1.0L / h;
  long double sum_w = 0.0L, sum_d1 = 0.0L, sum_d2 = 0.0L;
  long double prev_d1 = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double d1 = (static_cast<long double>(samples[i + 1]) - samples[i]) * inv_h;
    sum_d1 += d1 * d1;
    if (i >= 1) {
      const long double d2 = (d1 - prev_d1) * inv_h;
      sum_d2 += d2 * d2;
    }
    prev_d1 = d1;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    const long double theta = (i == 0 || i == n) ? 0.5L : 1.0L;
    sum_w += theta * eval_potential_ld(spec, samples[i], 0);
  }
  return h * (sum_w - static_cast<long double>(q) * sum_d1 + sum_d2);
}

SolveReport solve_interval(const IntervalProblem& prob, const std::vector<double>& init,
                           const SolveOptions& opts) {
  if (prob.cells < 16) {
    throw std::invalid_argument(
        fmt::format("solve_interval: cells = {} must be >= 16", prob.cells));
  }
  if (!(prob.length > 0.0)) {
    throw std::invalid_argument("solve_interval: length must be positive");
  }
  if (prob.potential.coeffs.empty()) {
    throw std::invalid_argument("solve_interval: potential has no coefficients");
  }
  if (!init.empty() && init.size() != static_cast<std::size_t>(prob.cells) + 1) {
    throw std::invalid_argument(
        fmt::format("solve_interval: init has {} samples, expected {} or none", init.size(),
                    prob.cells + 1));
  }

  State st;
  st.prob = &prob;
  st.n = prob.cells;
  st.h = static_cast<long double>(prob.length) / prob.cells;
  st.q = prob.q;
  st.left_clamped = prob.left.slope.has_value();
  st.right_clamped = prob.right.slope.has_value();
  st.w_left = prob.left.value;
  st.w_right = prob.right.value;
  if (st.left_clamped) {
    st.c_left = (2.0L * st.h * static_cast<long double>(*prob.left.slope) + 3.0L * st.w_left) / 4.0L;
  }
  if (st.right_clamped) {
    st.c_right =
        (3.0L * st.w_right - 2.0L * st.h * static_cast<long double>(*prob.right.slope)) / 4.0L;
  }
  st.first_free = st.left_clamped ? 2 : 1;
  st.last_free = st.right_clamped ? st.n - 2 : st.n - 1;
  st.m = st.last_free - st.first_free + 1;
  st.w.assign(st.n + 1, 0.0L);

  std::vector<long double> x(st.m, 0.0L);
  if (init.empty()) {
    for (int k = 0; k < st.m; ++k) {
      const long double t = static_cast<long double>(st.first_free + k) / st.n;
      x[k] = st.w_left + t * (st.w_right - st.w_left);
    }
  } else {
    for (int k = 0; k < st.m; ++k) {
      x[k] = init[static_cast<std::size_t>(st.first_free + k)];
    }
  }

  const long double eps_ld = std::numeric_limits<long double>::epsilon();
  const long double h4 = st.h * st.h * st.h * st.h;
  const long double floor_ld = 64.0L * eps_ld / h4;

  SolveReport report;
  report.residual_floor = static_cast<double>(floor_ld);
  const long double stop_tol = std::max(static_cast<long double>(opts.tol), floor_ld);

  st.rebuild(x);
  long double energy = 0.0L, gsup = 0.0L;
  std::vector<long double> g_free;
  st.evaluate(energy, g_free, gsup);

  long double lam = 0.0L;
  int iters = 0;
  bool converged = gsup <= stop_tol;
  std::vector<long double> diag, sub1, sub2, damped, rhs, p, x_new, g_new;
  Penta penta;
  while (!converged && iters < opts.max_iters) {
    ++iters;
    st.hessian(diag, sub1, sub2);
    long double diag_scale = 0.0L;
    for (const long double dk : diag) {
      diag_scale = std::max(diag_scale, dk < 0.0L ? -dk : dk);
    }
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      damped = diag;
      for (auto& dk : damped) {
        dk += lam;
      }
      if (!penta.factor(damped, sub1, sub2)) {
        lam = (lam == 0.0L) ? 1e-10L * diag_scale : lam * 10.0L;
        continue;
      }
      rhs.assign(st.m, 0.0L);
      for (int k = 0; k < st.m; ++k) {
        rhs[k] = -g_free[k];
      }
      penta.solve(rhs, p);
      x_new = x;
      for (int k = 0; k < st.m; ++k) {
        x_new[k] += p[k];
      }
      st.rebuild(x_new);
      long double energy_new = 0.0L, gsup_new = 0.0L;
      st.evaluate(energy_new, g_new, gsup_new);
      const long double slack = 1e-12L * (1.0L + std::abs(static_cast<double>(energy)));
      if (energy_new <= energy + slack || gsup_new < gsup) {
        x.swap(x_new);
        energy = energy_new;
        g_free.swap(g_new);
        gsup = gsup_new;
        lam *= 0.25L;
        if (lam < 1e-14L * diag_scale) {
          lam = 0.0L;
        }
        accepted = true;
        break;
      }
      lam = (lam == 0.0L) ? 1e-10L * diag_scale : lam * 10.0L;
    }
    if (!accepted || lam > 1e8L * diag_scale) {
      break;
    }
    converged = gsup <= stop_tol;
  }
  st.rebuild(x);

  report.converged = converged;
  report.iterations = iters;
  report.el_residual_sup = static_cast<double>(gsup);
  report.samples.resize(st.n + 1);
  for (int i = 0; i <= st.n; ++i) {
    report.samples[i] = static_cast<double>(st.w[i]);
  }
  report.energy_ld = interval_energy_ld(prob.potential, prob.q, st.h, report.samples);
  report.energy = static_cast<double>(report.energy_ld);
  const double hd = static_cast<double>(st.h);
  const auto& s = report.samples;
  if (!st.left_clamped) {
    report.end_curvature_left = std::abs(2.0 * s[0] - 5.0 * s[1] + 4.0 * s[2] - s[3]) / (hd * hd);
  }
  if (!st.right_clamped) {
    const std::size_t n = s.size() - 1;
    report.end_curvature_right =
        std::abs(2.0 * s[n] - 5.0 * s[n - 1] + 4.0 * s[n - 2] - s[n - 3]) / (hd * hd);
  }
  return report;
}

}  // namespace shlab
