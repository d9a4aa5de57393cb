#pragma once

// Closed-form references the library results are checked against. Everything
// here is independent of the integration code under test: cell propagators are
// written out analytically and multiplied exactly.

#include <cmath>
#include <vector>

#include "bandprufer/periodic.hpp"

namespace oracles {

struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
};

inline Mat2 mul(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c,
          m.c * n.b + m.d * n.d};
}

// Exact propagator of u'' = q u over a step of width h, acting on (u, u').
inline Mat2 constant_cell(double q, double h) {
  if (q > 0.0) {
    const double s = std::sqrt(q);
    return {std::cosh(s * h), std::sinh(s * h) / s, s * std::sinh(s * h), std::cosh(s * h)};
  }
  if (q < 0.0) {
    const double s = std::sqrt(-q);
    return {std::cos(s * h), std::sin(s * h) / s, -s * std::sin(s * h), std::cos(s * h)};
  }
  return {1.0, h, 0.0, 1.0};
}

// Exact monodromy of a piecewise-constant potential over one period.
inline Mat2 piecewise_monodromy(const std::vector<double>& cells, double E) {
  Mat2 T;
  const double h = 1.0 / static_cast<double>(cells.size());
  for (double v : cells) T = mul(constant_cell(v - E, h), T);
  return T;
}

inline Mat2 free_monodromy(double E) { return piecewise_monodromy({0.0}, E); }

inline double free_discriminant(double E) {
  const Mat2 t = free_monodromy(E);
  return t.a + t.d;
}

// Midpoint-sampled cosine potential, the standard nontrivial background.
inline bandprufer::PeriodicPotential mathieu(double amplitude = 2.0, int cells = 1024) {
  std::vector<double> v(static_cast<size_t>(cells));
  for (int i = 0; i < cells; ++i)
    v[static_cast<size_t>(i)] = amplitude * std::cos(2.0 * M_PI * (i + 0.5) / cells);
  return bandprufer::PeriodicPotential(v);
}

}  // namespace oracles
