#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "bandprufer/errors.hpp"
#include "bandprufer/jacobi.hpp"

using namespace bandprufer;

namespace {
JacobiPeriod free_period() {
  JacobiPeriod J;
  J.q = 1;
  J.a = {1.0};
  J.b = {0.0};
  return J;
}
}  // namespace

TEST_CASE("free one-period matrix is [[E, -1], [1, 0]] exactly") {
  const JacobiPeriod J = free_period();
  for (double E : {-1.7, -0.2, 0.0, 0.9, 1.999}) {
    const MonodromyMatrix t = jacobi_monodromy(J, E);
    CHECK(t.a == E);
    CHECK(t.b == -1.0);
    CHECK(t.c == 1.0);
    CHECK(t.d == 0.0);
    CHECK(t.trace() == E);
  }
}

TEST_CASE("period matrix determinant is 1 for random coefficient sets") {
  std::mt19937 rng(77123);
  std::uniform_real_distribution<double> ad(0.3, 2.0);
  std::uniform_real_distribution<double> bd(-1.0, 1.0);
  std::uniform_real_distribution<double> en(-3.0, 3.0);
  int checked = 0;
  while (checked < 50) {
    JacobiPeriod J;
    J.q = static_cast<int>(1 + rng() % 5);
    for (int i = 0; i < J.q; ++i) {
      J.a.push_back(ad(rng));
      J.b.push_back(bd(rng));
    }
    const MonodromyMatrix t = jacobi_monodromy(J, en(rng));
    // det T = prod a(n)/a(n+1) over a full period = 1 identically.
    CHECK(std::abs(t.det() - 1.0) <= 1e-13 * std::max(1.0, std::abs(t.a) * std::abs(t.d)));
    ++checked;
  }
}

TEST_CASE("free Floquet data at E = 1: k = pi/3, omega = sqrt(3), Gamma = 4/3") {
  const DiscreteFloquetData fd = jacobi_floquet(free_period(), 1.0);
  CHECK(std::abs(fd.k - M_PI / 3.0) <= 1e-12);
  CHECK(std::abs(fd.omega - std::sqrt(3.0)) <= 1e-12);
  CHECK(std::abs(fd.Gamma - 4.0 / 3.0) <= 1e-12);
  for (long n = 0; n <= fd.q; ++n)
    CHECK(std::abs(std::abs(fd.phi[static_cast<size_t>(n)]) - 1.0) <= 1e-12);
}

TEST_CASE("free Gamma equals 1/(1 - E^2/4) across the band") {
  const JacobiPeriod J = free_period();
  for (double E : {-1.8, -1.0, -0.3, 0.4, 1.2, 1.9}) {
    const DiscreteFloquetData fd = jacobi_floquet(J, E);
    const double expect = 1.0 / (1.0 - E * E / 4.0);
    CHECK(std::abs(fd.Gamma - expect) <= 1e-12 * expect);
    CHECK(std::abs(fd.k - std::acos(E / 2.0)) <= 1e-12);
  }
}

TEST_CASE("Gamma and k are invariant under cyclic shifts of the period") {
  const std::vector<double> a{1.1, 0.8, 1.3};
  const std::vector<double> b{0.2, -0.4, 0.1};
  JacobiPeriod J0;
  J0.q = 3;
  J0.a = a;
  J0.b = b;
  // Pick an energy inside a band of J0.
  double E = 0.0;
  bool found = false;
  for (double cand = -2.5; cand <= 2.5; cand += 0.01) {
    if (std::abs(jacobi_discriminant(J0, cand)) < 1.6) {
      E = cand;
      found = true;
      break;
    }
  }
  REQUIRE(found);
  const DiscreteFloquetData base = jacobi_floquet(J0, E);
  for (int s = 1; s < 3; ++s) {
    JacobiPeriod Js;
    Js.q = 3;
    for (int i = 0; i < 3; ++i) {
      Js.a.push_back(a[static_cast<size_t>((i + s) % 3)]);
      Js.b.push_back(b[static_cast<size_t>((i + s) % 3)]);
    }
    const DiscreteFloquetData sh = jacobi_floquet(Js, E);
    CHECK(std::abs(sh.k - base.k) <= 1e-10);
    CHECK(std::abs(sh.Gamma - base.Gamma) <= 1e-10 * std::max(1.0, base.Gamma));
  }
}

TEST_CASE("free quasimomentum is strictly decreasing in E") {
  const JacobiPeriod J = free_period();
  double prev = M_PI;
  for (int i = 0; i < 400; ++i) {
    const double E = -1.95 + 3.9 * i / 399.0;
    const double k = jacobi_quasimomentum(J, E);
    CHECK(k < prev);
    CHECK(std::abs(k - std::acos(E / 2.0)) <= 1e-12);
    prev = k;
  }
}

TEST_CASE("the Floquet sequence extends by the multiplier") {
  JacobiPeriod J;
  J.q = 2;
  J.a = {1.0, 1.0};
  J.b = {0.5, -0.5};
  const DiscreteFloquetData fd = jacobi_floquet(J, 1.2);
  for (long n : {0L, 1L, 2L, 5L, -3L}) {
    const std::complex<double> lhs = fd.phi_at(n + fd.q);
    const std::complex<double> rhs = fd.multiplier * fd.phi_at(n);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    CHECK(std::abs(fd.abs_phi_at(n + fd.q) - fd.abs_phi_at(n)) <= 1e-12);
  }
}

TEST_CASE("out-of-band and near-edge energies are rejected") {
  const JacobiPeriod J = free_period();
  bool threw = false;
  try {
    static_cast<void>(jacobi_floquet(J, 2.5));
  } catch (const NumericError& e) {
    threw = true;
    CHECK(e.code() == "outside-band");
  }
  CHECK(threw);

  threw = false;
  try {
    static_cast<void>(jacobi_floquet(J, 2.0 - 1e-13));
  } catch (const NumericError& e) {
    threw = true;
    CHECK((e.code() == "edge-degeneracy" || e.code() == "outside-band"));
  }
  CHECK(threw);
}

TEST_CASE("coefficient validation rejects non-positive a") {
  JacobiPeriod J;
  J.q = 2;
  J.a = {1.0, 0.0};
  J.b = {0.0, 0.0};
  CHECK_THROWS_AS(J.validate(), std::invalid_argument);
  J.a = {1.0, 1.0};
  J.b = {0.0};  // wrong length
  CHECK_THROWS_AS(J.validate(), std::invalid_argument);
}
