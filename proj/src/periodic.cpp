#include "bandprufer/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bandprufer/util.hpp"

namespace bandprufer {

PeriodicPotential::PeriodicPotential(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("PeriodicPotential: need at least one cell");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("PeriodicPotential: non-finite cell value");
  auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
}

PeriodicPotential PeriodicPotential::sample(const std::function<double(double)>& f, int m) {
  if (m < 1) throw std::invalid_argument("PeriodicPotential::sample: m must be >= 1");
  std::vector<double> vals(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i)
    vals[static_cast<size_t>(i)] = f((i + 0.5) / static_cast<double>(m));
  return PeriodicPotential(std::move(vals));
}

double PeriodicPotential::at(double x) const {
  double fx = x - std::floor(x);
  int idx = static_cast<int>(fx * cells());
  if (idx >= cells()) idx = cells() - 1;
  if (idx < 0) idx = 0;
  return values_[static_cast<size_t>(idx)];
}

namespace {

// Step count per potential cell. The density rule ties the period-wide node
// count to sqrt(E) so the local phase advance per step stays bounded; counts
// are kept even (quadrature pairs stay inside one cell) and can be bumped to
// make the period-wide count divisible by a caller-supplied grid size.
long steps_per_cell(double E, int m, const IntegrationOptions& opts) {
  double base = 1024.0 * std::max(1.0, std::sqrt(std::max(E, 0.0))) * std::max(1, opts.refine);
  long pc = static_cast<long>(std::ceil(base / m));
  if (pc < 2) pc = 2;
  if (pc % 2) ++pc;
  if (opts.grid_multiple > 0) {
    long g = opts.grid_multiple;
    long r = g / std::gcd(g, static_cast<long>(m));
    long step = std::lcm(r, 2L);
    pc = ((pc + step - 1) / step) * step;
  }
  return pc;
}

}  // namespace

BasisSolution integrate_basis(const PeriodicPotential& v0, double E, IntegrationOptions opts) {
  const int m = v0.cells();
  const long pc = steps_per_cell(E, m, opts);
  const long n = pc * m;
  BasisSolution bs;
  bs.steps = static_cast<int>(n);
  bs.h = 1.0 / static_cast<double>(n);
  bs.u1.assign(static_cast<size_t>(n) + 1, 0.0);
  bs.du1.assign(static_cast<size_t>(n) + 1, 0.0);
  bs.u2.assign(static_cast<size_t>(n) + 1, 0.0);
  bs.du2.assign(static_cast<size_t>(n) + 1, 0.0);
  bs.u1[0] = 1.0;
  bs.du2[0] = 1.0;

  const double h = bs.h;
  const double h2 = h * h;
  for (int cell = 0; cell < m; ++cell) {
    // u'' = q u with q constant on the cell; the classical 4th-order one-step
    // map for this linear system is the degree-4 Taylor polynomial of its
    // exact propagator.
    const double q = v0.values()[static_cast<size_t>(cell)] - E;
    const double A = 1.0 + q * h2 / 2.0 + q * q * h2 * h2 / 24.0;
    const double B = h + q * h * h2 / 6.0;
    const double qB = q * B;
    const size_t begin = static_cast<size_t>(cell) * static_cast<size_t>(pc);
    for (size_t i = begin; i < begin + static_cast<size_t>(pc); ++i) {
      bs.u1[i + 1] = A * bs.u1[i] + B * bs.du1[i];
      bs.du1[i + 1] = qB * bs.u1[i] + A * bs.du1[i];
      bs.u2[i + 1] = A * bs.u2[i] + B * bs.du2[i];
      bs.du2[i + 1] = qB * bs.u2[i] + A * bs.du2[i];
    }
  }
  if (!std::isfinite(bs.u1.back()) || !std::isfinite(bs.du1.back()) ||
      !std::isfinite(bs.u2.back()) || !std::isfinite(bs.du2.back()))
    throw NumericError("stiff-integration", "basis integration produced non-finite values");
  return bs;
}

MonodromyMatrix monodromy(const PeriodicPotential& v0, double E, IntegrationOptions opts) {
  return integrate_basis(v0, E, opts).monodromy(E);
}

double discriminant(const PeriodicPotential& v0, double E, IntegrationOptions opts) {
  return monodromy(v0, E, opts).trace();
}

double quasimomentum(const PeriodicPotential& v0, double E, IntegrationOptions opts) {
  double d = discriminant(v0, E, opts);
  if (!(std::abs(d) < 2.0))
    throw NumericError("outside-band", "quasimomentum: |discriminant| >= 2 at E = " + std::to_string(E));
  return std::acos(d / 2.0);
}

std::complex<double> FloquetData::phi_at_node(long global_node) const {
  long p = global_node / steps;
  long r = global_node % steps;
  if (r < 0) {
    r += steps;
    --p;
  }
  if (p == 0) return phi[static_cast<size_t>(r)];
  return std::polar(1.0, std::arg(multiplier) * static_cast<double>(p)) * phi[static_cast<size_t>(r)];
}

std::complex<double> FloquetData::dphi_at_node(long global_node) const {
  long p = global_node / steps;
  long r = global_node % steps;
  if (r < 0) {
    r += steps;
    --p;
  }
  if (p == 0) return dphi[static_cast<size_t>(r)];
  return std::polar(1.0, std::arg(multiplier) * static_cast<double>(p)) * dphi[static_cast<size_t>(r)];
}

FloquetData floquet_solution(const PeriodicPotential& v0, double E, IntegrationOptions opts) {
  BasisSolution bs = integrate_basis(v0, E, opts);
  MonodromyMatrix t = bs.monodromy(E);
  const double d = t.trace();
  if (!(std::abs(d) < 2.0))
    throw NumericError("outside-band", "floquet_solution: |discriminant| >= 2 at E = " + std::to_string(E));
  const double k = std::acos(d / 2.0);
  if (std::sin(k) < 1e-6)
    throw NumericError("edge-degeneracy", "floquet_solution: E too close to a band edge");

  const std::complex<double> eik(std::cos(k), std::sin(k));
  const std::complex<double> phi0 = std::complex<double>(-t.b, 0.0);
  const std::complex<double> dphi0 = std::complex<double>(t.a, 0.0) - eik;

  FloquetData fd;
  fd.energy = E;
  fd.k = k;
  fd.steps = bs.steps;
  fd.h = bs.h;
  const size_t nodes = bs.u1.size();
  fd.phi.resize(nodes);
  fd.dphi.resize(nodes);
  for (size_t i = 0; i < nodes; ++i) {
    fd.phi[i] = phi0 * bs.u1[i] + dphi0 * bs.u2[i];
    fd.dphi[i] = phi0 * bs.du1[i] + dphi0 * bs.du2[i];
  }

  double omega = 2.0 * std::imag(std::conj(fd.phi[0]) * fd.dphi[0]);
  fd.multiplier = eik;
  if (omega < 0.0) {
    for (size_t i = 0; i < nodes; ++i) {
      fd.phi[i] = std::conj(fd.phi[i]);
      fd.dphi[i] = std::conj(fd.dphi[i]);
    }
    fd.multiplier = std::conj(eik);
    omega = -omega;
  }
  if (omega < 1e-12)
    throw NumericError("edge-degeneracy", "floquet_solution: Wronskian too small at E = " + std::to_string(E));
  fd.omega = omega;

  // The seed must be an eigenvector of the period map for the stored
  // multiplier; equivalently, the integrated solution returns to multiplier
  // times its initial data after one period.
  const double scale = std::max({1.0, std::abs(fd.phi[0]), std::abs(fd.dphi[0])});
  if (std::abs(fd.phi.back() - fd.multiplier * fd.phi.front()) > 1e-8 * scale ||
      std::abs(fd.dphi.back() - fd.multiplier * fd.dphi.front()) > 1e-8 * scale)
    throw NumericError("stiff-integration", "floquet_solution: period map eigenvector check failed");

  fd.gamma_prime.resize(nodes);
  std::vector<double> phi4(nodes);
  for (size_t i = 0; i < nodes; ++i) {
    const double p2 = std::norm(fd.phi[i]);
    if (!(p2 > 0.0))
      throw NumericError("edge-degeneracy", "floquet_solution: solution vanishes on the grid");
    fd.gamma_prime[i] = omega / (2.0 * p2);
    phi4[i] = p2 * p2;
  }
  fd.Gamma = (4.0 / (omega * omega)) * simpson(phi4, fd.h);
  return fd;
}

}  // namespace bandprufer
