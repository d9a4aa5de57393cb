#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "bandprufer/errors.hpp"

namespace bandprufer {

// 1-periodic background potential, piecewise constant on a uniform grid:
// value(x) = values[floor(m * frac(x))].
class PeriodicPotential {
public:
  explicit PeriodicPotential(std::vector<double> values);

  static PeriodicPotential constant(double v) { return PeriodicPotential({v}); }
  // Midpoint sampling of a callable on m uniform cells.
  static PeriodicPotential sample(const std::function<double(double)>& f, int m);

  int cells() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }
  double at(double x) const;
  double min_value() const { return min_; }
  double max_value() const { return max_; }

private:
  std::vector<double> values_;
  double min_, max_;
};

// Transfer matrix over one period of -u'' + V0 u = E u, columns from the
// canonical initial data (1,0) and (0,1).
struct MonodromyMatrix {
  double a, b, c, d;
  double energy;
  double trace() const { return a + d; }
  double det() const { return a * d - b * c; }
};

struct IntegrationOptions {
  int refine = 1;         // step-count multiplier, for convergence checks
  int grid_multiple = 0;  // force the node count per period to be a multiple
};

// Node samples of the two canonical solutions over one period.
struct BasisSolution {
  int steps;  // nodes = steps + 1, spacing 1/steps
  double h;
  std::vector<double> u1, du1, u2, du2;
  MonodromyMatrix monodromy(double energy) const {
    return {u1.back(), u2.back(), du1.back(), du2.back(), energy};
  }
};

BasisSolution integrate_basis(const PeriodicPotential& v0, double E,
                              IntegrationOptions opts = {});

MonodromyMatrix monodromy(const PeriodicPotential& v0, double E,
                          IntegrationOptions opts = {});

double discriminant(const PeriodicPotential& v0, double E, IntegrationOptions opts = {});

// k = arccos(D/2) in (0, pi); throws outside-band when |D| >= 2.
double quasimomentum(const PeriodicPotential& v0, double E, IntegrationOptions opts = {});

// Floquet solution phi with phi(0) = -b, phi'(0) = a - e^{ik}, normalized so
// the conserved Wronskian omega = 2 Im(conj(phi) phi') is positive.
struct FloquetData {
  double energy = 0.0;
  double k = 0.0;      // in (0, pi)
  double omega = 0.0;  // > 0
  std::complex<double> multiplier;  // Floquet multiplier of the stored phi
  int steps = 0;                    // grid nodes = steps + 1 over [0, 1]
  double h = 0.0;
  std::vector<std::complex<double>> phi, dphi;
  std::vector<double> gamma_prime;  // omega / (2 |phi|^2) at the nodes
  double Gamma = 0.0;               // integral of (4/omega^2) |phi|^4 over a period

  std::complex<double> phi_at_node(long global_node) const;
  std::complex<double> dphi_at_node(long global_node) const;
};

FloquetData floquet_solution(const PeriodicPotential& v0, double E,
                             IntegrationOptions opts = {});

}  // namespace bandprufer
