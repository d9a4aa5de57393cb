#pragma once

#include <complex>
#include <vector>

#include "bandprufer/errors.hpp"
#include "bandprufer/periodic.hpp"

namespace bandprufer {

// q-periodic Jacobi coefficients for
//   a(n+1) u(n+1) + a(n) u(n-1) + b(n+1) u(n) = E u(n),
// with a(n) > 0 and both sequences extended q-periodically.
struct JacobiPeriod {
  int q = 1;
  std::vector<double> a;
  std::vector<double> b;

  void validate() const;
  double a_at(long n) const { return a[static_cast<size_t>(mod(n))]; }
  double b_at(long n) const { return b[static_cast<size_t>(mod(n))]; }
  long mod(long n) const {
    long r = n % q;
    return r < 0 ? r + q : r;
  }
  double b_min() const;
  double b_max() const;
  double a_max() const;
};

// One-step matrix mapping (u(n), u(n-1)) to (u(n+1), u(n)).
MonodromyMatrix jacobi_one_step(const JacobiPeriod& J, double E, long n);

// Product over one period starting at n = 0.
MonodromyMatrix jacobi_monodromy(const JacobiPeriod& J, double E);

double jacobi_discriminant(const JacobiPeriod& J, double E);

double jacobi_quasimomentum(const JacobiPeriod& J, double E);

// Floquet sequence phi(0..q) with phi(n+q) = multiplier * phi(n); the weighted
// Wronskian a(n+1)(conj(phi(n)) phi(n+1) - conj(phi(n+1)) phi(n)) = i omega is
// normalized positive.
struct DiscreteFloquetData {
  double energy = 0.0;
  double k = 0.0;
  double omega = 0.0;
  std::complex<double> multiplier;
  int q = 1;
  std::vector<std::complex<double>> phi;  // sites 0..q inclusive
  double Gamma = 0.0;  // (1/q) sum_{n=1}^{q} (4/omega^2) |phi(n)|^4

  std::complex<double> phi_at(long n) const;
  double abs_phi_at(long n) const { return std::abs(phi[static_cast<size_t>(n % q < 0 ? n % q + q : n % q)]); }
};

DiscreteFloquetData jacobi_floquet(const JacobiPeriod& J, double E);

}  // namespace bandprufer
