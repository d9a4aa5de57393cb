#include "bandprufer/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bandprufer {

void JacobiPeriod::validate() const {
  if (q < 1) throw std::invalid_argument("JacobiPeriod: q must be >= 1");
  if (a.size() != static_cast<size_t>(q) || b.size() != static_cast<size_t>(q))
    throw std::invalid_argument("JacobiPeriod: a and b must have length q");
  for (double v : a)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("JacobiPeriod: a entries must be positive and finite");
  for (double v : b)
    if (!std::isfinite(v)) throw std::invalid_argument("JacobiPeriod: b entries must be finite");
}

double JacobiPeriod::b_min() const { return *std::min_element(b.begin(), b.end()); }
double JacobiPeriod::b_max() const { return *std::max_element(b.begin(), b.end()); }
double JacobiPeriod::a_max() const { return *std::max_element(a.begin(), a.end()); }

MonodromyMatrix jacobi_one_step(const JacobiPeriod& J, double E, long n) {
  const double an1 = J.a_at(n + 1);
  return {(E - J.b_at(n + 1)) / an1, -J.a_at(n) / an1, 1.0, 0.0, E};
}

namespace {
MonodromyMatrix mul(const MonodromyMatrix& l, const MonodromyMatrix& r) {
  return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
          l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d, r.energy};
}
}  // namespace

MonodromyMatrix jacobi_monodromy(const JacobiPeriod& J, double E) {
  J.validate();
  MonodromyMatrix t{1.0, 0.0, 0.0, 1.0, E};
  for (long n = 0; n < J.q; ++n) t = mul(jacobi_one_step(J, E, n), t);
  return t;
}

double jacobi_discriminant(const JacobiPeriod& J, double E) {
  return jacobi_monodromy(J, E).trace();
}

double jacobi_quasimomentum(const JacobiPeriod& J, double E) {
  double d = jacobi_discriminant(J, E);
  if (!(std::abs(d) < 2.0))
    throw NumericError("outside-band",
                       "jacobi_quasimomentum: |discriminant| >= 2 at E = " + std::to_string(E));
  return std::acos(d / 2.0);
}

std::complex<double> DiscreteFloquetData::phi_at(long n) const {
  long p = n / q;
  long r = n % q;
  if (r < 0) {
    r += q;
    --p;
  }
  if (p == 0) return phi[static_cast<size_t>(r)];
  return std::polar(1.0, std::arg(multiplier) * static_cast<double>(p)) * phi[static_cast<size_t>(r)];
}

DiscreteFloquetData jacobi_floquet(const JacobiPeriod& J, double E) {
  MonodromyMatrix t = jacobi_monodromy(J, E);
  const double d = t.trace();
  if (!(std::abs(d) < 2.0))
    throw NumericError("outside-band", "jacobi_floquet: |discriminant| >= 2 at E = " + std::to_string(E));
  const double k = std::acos(d / 2.0);
  if (std::sin(k) < 1e-6)
    throw NumericError("edge-degeneracy", "jacobi_floquet: E too close to a band edge");

  const std::complex<double> eik(std::cos(k), std::sin(k));
  // Eigenvector of the period map (mapping (u(n), u(n-1)) pairs) for the
  // eigenvalue e^{ik}, mirroring the continuum seed.
  std::complex<double> u_prev = std::complex<double>(t.a, 0.0) - eik;  // u(-1)
  std::complex<double> u_cur = std::complex<double>(-t.b, 0.0);        // u(0)

  DiscreteFloquetData fd;
  fd.energy = E;
  fd.k = k;
  fd.q = J.q;
  fd.phi.resize(static_cast<size_t>(J.q) + 1);
  fd.phi[0] = u_cur;
  for (long n = 0; n < J.q; ++n) {
    std::complex<double> u_next =
        ((E - J.b_at(n + 1)) * u_cur - J.a_at(n) * u_prev) / J.a_at(n + 1);
    fd.phi[static_cast<size_t>(n) + 1] = u_next;
    u_prev = u_cur;
    u_cur = u_next;
  }

  // Conserved weighted Wronskian; its constancy over the period is an
  // algebraic identity, so any spread beyond rounding signals a broken state.
  double omega_sum = 0.0;
  for (long n = 0; n < J.q; ++n)
    omega_sum += 2.0 * J.a_at(n + 1) *
                 std::imag(std::conj(fd.phi[static_cast<size_t>(n)]) * fd.phi[static_cast<size_t>(n) + 1]);
  double omega = omega_sum / J.q;
  for (long n = 0; n < J.q; ++n) {
    const double wn = 2.0 * J.a_at(n + 1) *
                      std::imag(std::conj(fd.phi[static_cast<size_t>(n)]) * fd.phi[static_cast<size_t>(n) + 1]);
    if (std::abs(wn - omega) > 1e-10 * std::max(1.0, std::abs(omega)))
      throw NumericError("stiff-integration", "jacobi_floquet: Wronskian is not conserved");
  }

  fd.multiplier = eik;
  if (omega < 0.0) {
    for (auto& v : fd.phi) v = std::conj(v);
    fd.multiplier = std::conj(eik);
    omega = -omega;
  }
  if (omega < 1e-12)
    throw NumericError("edge-degeneracy", "jacobi_floquet: Wronskian too small at E = " + std::to_string(E));
  fd.omega = omega;

  const double scale = std::max(1.0, std::abs(fd.phi[0]));
  if (std::abs(fd.phi[static_cast<size_t>(J.q)] - fd.multiplier * fd.phi[0]) > 1e-8 * scale)
    throw NumericError("stiff-integration", "jacobi_floquet: period map eigenvector check failed");

  double s = 0.0;
  for (long n = 1; n <= J.q; ++n) {
    const double p2 = std::norm(fd.phi[static_cast<size_t>(n)]);
    if (!(p2 > 0.0))
      throw NumericError("edge-degeneracy", "jacobi_floquet: solution vanishes at a site");
    s += p2 * p2;
  }
  fd.Gamma = (4.0 / (omega * omega)) * s / J.q;
  return fd;
}

}  // namespace bandprufer
