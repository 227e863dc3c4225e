#include "shlab/field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>
#include <fmt/core.h>

#include "spectral_internal.hpp"

namespace shlab {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Per-thread cached FFTW plans and buffers for one transform size.
struct TransformWorkspace {
  int n = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit TransformWorkspace(int size) : n(size) {
    static std::mutex planner_mutex;
    std::lock_guard<std::mutex> lock(planner_mutex);
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(n / 2 + 1);
    forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
  }
  ~TransformWorkspace() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
  TransformWorkspace(const TransformWorkspace&) = delete;
  TransformWorkspace& operator=(const TransformWorkspace&) = delete;
};

TransformWorkspace& workspace_for(int n) {
  thread_local std::map<int, std::unique_ptr<TransformWorkspace>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<TransformWorkspace>(n)).first;
  }
  return *it->second;
}

Field spectral_derivative(const Field& f, int order) {
  const int n = f.grid.n;
  auto& ws = workspace_for(n);
  std::copy(f.samples.begin(), f.samples.end(), ws.real);
  fftw_execute(ws.forward);

  const int n_modes = n / 2 + 1;
  for (int m = 0; m < n_modes; ++m) {
    const double k = 2.0 * std::numbers::pi * m;
    std::complex<double> factor;
    switch (order) {
      case 1: factor = {0.0, k}; break;
      case 2: factor = {-k * k, 0.0}; break;
      case 3: factor = {0.0, -k * k * k}; break;
      default: factor = {k * k * k * k, 0.0}; break;
    }
    if (order % 2 == 1 && m == n / 2) {
      factor = 0.0;  // the Nyquist mode has no well-defined odd derivative
    }
    std::complex<double> value(ws.spec[m][0], ws.spec[m][1]);
    value *= factor / static_cast<double>(n);
    ws.spec[m][0] = value.real();
    ws.spec[m][1] = value.imag();
  }
  fftw_execute(ws.backward);

  Field out{f.grid, std::vector<double>(ws.real, ws.real + n)};
  return out;
}

// Centered interior stencils with second-order one-sided closures.
Field fd_derivative_1(const Field& f) {
  const int n = f.grid.n;
  const double h = f.grid.spacing();
  const auto& u = f.samples;
  Field out{f.grid, std::vector<double>(n)};
  auto& d = out.samples;
  d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  for (int i = 1; i + 1 < n; ++i) {
    d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  }
  d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
  return out;
}

Field fd_derivative_2(const Field& f) {
  const int n = f.grid.n;
  const double h = f.grid.spacing();
  const auto& u = f.samples;
  Field out{f.grid, std::vector<double>(n)};
  auto& d = out.samples;
  d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / (h * h);
  for (int i = 1; i + 1 < n; ++i) {
    d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
  }
  d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / (h * h);
  return out;
}

Field fd_derivative(const Field& f, int order) {
  if (f.grid.n < 5) {
    throw std::invalid_argument("derivative: interval grid too small for the stencils");
  }
  switch (order) {
    case 1: return fd_derivative_1(f);
    case 2: return fd_derivative_2(f);
    case 3: return fd_derivative_1(fd_derivative_2(f));
    default: return fd_derivative_2(fd_derivative_2(f));
  }
}

}  // namespace

namespace detail {

void fft_forward(int n, const double* in, std::complex<double>* out) {
  auto& ws = workspace_for(n);
  std::copy(in, in + n, ws.real);
  fftw_execute(ws.forward);
  for (int m = 0; m <= n / 2; ++m) {
    out[m] = {ws.spec[m][0], ws.spec[m][1]};
  }
}

void fft_backward(int n, const std::complex<double>* in, double* out) {
  auto& ws = workspace_for(n);
  const double inv_n = 1.0 / n;
  for (int m = 0; m <= n / 2; ++m) {
    ws.spec[m][0] = in[m].real() * inv_n;
    ws.spec[m][1] = in[m].imag() * inv_n;
  }
  fftw_execute(ws.backward);
  std::copy(ws.real, ws.real + n, out);
}

}  // namespace detail

Grid Grid::torus(int n) {
  if (n < 16 || !is_power_of_two(n)) {
    throw std::invalid_argument(
        fmt::format("Grid::torus: n = {} must be a power of two with n >= 16", n));
  }
  return Grid{Topology::torus, 0.0, 1.0, n};
}

Grid Grid::interval(double a, double b, int n) {
  if (!(b > a)) {
    throw std::invalid_argument("Grid::interval: requires b > a");
  }
  if (n < 16) {
    throw std::invalid_argument("Grid::interval: requires n >= 16");
  }
  return Grid{Topology::interval, a, b, n};
}

double Grid::spacing() const {
  return topology == Topology::torus ? (b - a) / n : (b - a) / (n - 1);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> xs(n);
  const double h = spacing();
  for (int i = 0; i < n; ++i) {
    xs[i] = a + i * h;
  }
  return xs;
}

bool Grid::same_as(const Grid& other) const {
  return topology == other.topology && a == other.a && b == other.b && n == other.n;
}

Field make_field(const Grid& grid, const std::function<double(double)>& f) {
  Field out{grid, std::vector<double>(grid.n)};
  const double h = grid.spacing();
  for (int i = 0; i < grid.n; ++i) {
    out.samples[i] = f(grid.a + i * h);
  }
  return out;
}

Field constant_field(const Grid& grid, double value) {
  return Field{grid, std::vector<double>(grid.n, value)};
}

Field derivative(const Field& f, int order) {
  if (order < 1 || order > 4) {
    throw std::invalid_argument(fmt::format("derivative: order {} not in 1..4", order));
  }
  return f.grid.topology == Topology::torus ? spectral_derivative(f, order)
                                            : fd_derivative(f, order);
}

double integrate(const Field& f) {
  const auto& u = f.samples;
  if (f.grid.topology == Topology::torus) {
    double sum = 0.0;
    for (double v : u) sum += v;
    return sum / f.grid.n * f.grid.length();
  }
  const double h = f.grid.spacing();
  double sum = 0.5 * (u.front() + u.back());
  for (size_t i = 1; i + 1 < u.size(); ++i) sum += u[i];
  return sum * h;
}

double distance(const Field& f, const Field& g, Norm norm) {
  if (!f.grid.same_as(g.grid)) {
    throw std::invalid_argument("distance: fields live on different grids");
  }
  Field diff{f.grid, std::vector<double>(f.grid.n)};
  for (int i = 0; i < f.grid.n; ++i) {
    diff.samples[i] = f.samples[i] - g.samples[i];
  }
  switch (norm) {
    case Norm::L1:
      for (auto& v : diff.samples) v = std::abs(v);
      return integrate(diff);
    case Norm::L2:
      for (auto& v : diff.samples) v = v * v;
      return std::sqrt(integrate(diff));
    default: {
      double m = 0.0;
      for (double v : diff.samples) m = std::max(m, std::abs(v));
      return m;
    }
  }
}

ZeroSet find_zeros(const Field& f, double min_separation) {
  const double h = f.grid.spacing();
  if (min_separation < 2.0 * h * (1.0 - 1e-12)) {
    throw std::invalid_argument(
        fmt::format("find_zeros: min_separation = {} is below two grid spacings {}",
                    min_separation, 2.0 * h));
  }
  double sup = 0.0;
  for (double v : f.samples) sup = std::max(sup, std::abs(v));
  if (sup <= 1e-14) {
    throw std::domain_error("find_zeros: field is identically zero to 1e-14");
  }

  const bool periodic = f.grid.topology == Topology::torus;
  const int n = f.grid.n;
  const int n_edges = periodic ? n : n - 1;
  std::vector<double> zeros;
  for (int e = 0; e < n_edges; ++e) {
    const int i = e;
    const int j = (e + 1) % n;
    const double fi = f.samples[i];
    const double fj = f.samples[j];
    const double xi = f.grid.a + i * h;
    if (fi == 0.0) {
      zeros.push_back(xi);
    } else if (fi * fj < 0.0) {
      zeros.push_back(xi + h * fi / (fi - fj));
    }
  }
  std::sort(zeros.begin(), zeros.end());

  std::vector<double> merged;
  for (double z : zeros) {
    if (merged.empty() || z - merged.back() >= min_separation) {
      merged.push_back(z);
    }
  }
  if (periodic && merged.size() > 1) {
    const double wrap_gap = merged.front() + f.grid.length() - merged.back();
    if (wrap_gap < min_separation) {
      merged.pop_back();
    }
  }

  ZeroSet out;
  out.locations = merged;
  if (periodic) {
    for (size_t k = 0; k < merged.size(); ++k) {
      const double next = (k + 1 < merged.size()) ? merged[k + 1] : merged.front() + f.grid.length();
      out.gaps.push_back(next - merged[k]);
    }
  } else {
    for (size_t k = 0; k + 1 < merged.size(); ++k) {
      out.gaps.push_back(merged[k + 1] - merged[k]);
    }
  }
  return out;
}

}  // namespace shlab
