#pragma once

#include <functional>
#include <vector>

namespace shlab {

enum class Topology { torus, interval };

// Uniform sampling grid. The torus is always [0,1) with nodes j/n (n a power of two);
// intervals carry both endpoints with nodes a + j*(b-a)/(n-1).
struct Grid {
  Topology topology = Topology::torus;
  double a = 0.0;
  double b = 1.0;
  int n = 0;

  static Grid torus(int n);
  static Grid interval(double a, double b, int n);

  double spacing() const;
  double length() const { return b - a; }
  std::vector<double> nodes() const;
  bool same_as(const Grid& other) const;
};

struct Field {
  Grid grid;
  std::vector<double> samples;
};

Field make_field(const Grid& grid, const std::function<double(double)>& f);
Field constant_field(const Grid& grid, double value);

// Differentiation: spectral on the torus (Nyquist zeroed for odd orders), centered
// finite differences with second-order one-sided closures on intervals (orders 3 and 4
// by composition). Throws std::invalid_argument for orders outside 1..4.
Field derivative(const Field& f, int order);

// Torus: mean times length (spectrally exact for trigonometric polynomials);
// interval: composite trapezoid.
double integrate(const Field& f);

enum class Norm { L1, L2, Linf };

// Discrete quadrature of the requested norm of f - g. Throws on grid mismatch.
double distance(const Field& f, const Field& g, Norm norm);

struct ZeroSet {
  std::vector<double> locations;  // sorted
  std::vector<double> gaps;       // on the torus includes the wrap-around gap
};

// Sign-change detection with linear interpolation; zeros closer than min_separation
// are merged keeping the first. Throws std::domain_error when the field is identically
// within 1e-14 of zero, std::invalid_argument when min_separation < 2 grid spacings.
ZeroSet find_zeros(const Field& f, double min_separation);

}  // namespace shlab
