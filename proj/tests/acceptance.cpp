// Acceptance gate for the band/Prufer library: ten end-to-end criteria, one
// [PASS]/[FAIL] line each, nonzero exit when any of them fails or overruns its
// runtime budget. Tolerances are pinned here on purpose; loosening them is a
// behaviour change, not a cleanup.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "bandprufer/bands.hpp"
#include "bandprufer/embedded.hpp"
#include "bandprufer/jacobi.hpp"
#include "bandprufer/periodic.hpp"
#include "bandprufer/prufer.hpp"

using namespace bandprufer;

namespace {

int g_failures = 0;

struct Checks {
  std::string log;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (!log.empty()) log += "; ";
    log += what;
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

template <typename Fn>
void criterion(int index, const char* label, double budget_s, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  try {
    Checks c;
    body(c);
    detail = c.log;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt > budget_s)
    detail += (detail.empty() ? "" : "; ") + std::string("runtime ") + num(dt) +
              "s over budget " + num(budget_s) + "s";
  const bool ok = detail.empty();
  std::printf("[%s] %2d %s (%.2fs)\n", ok ? "PASS" : "FAIL", index, label, dt);
  if (!ok) {
    std::printf("       %s\n", detail.c_str());
    ++g_failures;
  }
}

PeriodicPotential free_potential() { return PeriodicPotential::constant(0.0); }

JacobiPeriod free_period() {
  JacobiPeriod J;
  J.q = 1;
  J.a = {1.0};
  J.b = {0.0};
  return J;
}

PeriodicPotential mathieu() {
  return PeriodicPotential::sample(
      [](double x) { return 2.0 * std::cos(2.0 * M_PI * x); }, 1024);
}

}  // namespace

int main() {
  std::printf("bandprufer acceptance suite\n");

  criterion(1, "free continuum Gamma equals 1/E", 1.0, [](Checks& c) {
    const PeriodicPotential v0 = free_potential();
    for (double E : {0.5, 1.0, 2.0, 5.0}) {
      const FloquetData fd = floquet_solution(v0, E);
      c.require(std::abs(fd.Gamma - 1.0 / E) <= 1e-8 / E,
                "Gamma(" + num(E) + ") = " + num(fd.Gamma) + " vs " + num(1.0 / E));
    }
  });

  criterion(2, "free discrete Gamma equals 1/(1 - E^2/4)", 1.0, [](Checks& c) {
    const JacobiPeriod J = free_period();
    for (double E : {-1.8, -1.0, -0.3, 0.4, 1.2, 1.9}) {
      const DiscreteFloquetData fd = jacobi_floquet(J, E);
      const double expect = 1.0 / (1.0 - E * E / 4.0);
      c.require(std::abs(fd.Gamma - expect) <= 1e-12 * expect,
                "Gamma(" + num(E) + ") = " + num(fd.Gamma) + " vs " + num(expect));
    }
  });

  criterion(3, "free band edges at (n pi)^2 with tangential interior gaps", 10.0,
            [](Checks& c) {
    const BandStructure bs = compute_bands(free_potential(), 170.0);
    c.require(bs.standard.size() == 5,
              "expected 5 bands, got " + num(static_cast<double>(bs.standard.size())));
    if (bs.standard.size() != 5) return;
    for (int n = 1; n <= 4; ++n) {
      const double edge = n * n * M_PI * M_PI;
      const StandardBand& l = bs.standard[static_cast<size_t>(n - 1)];
      const StandardBand& r = bs.standard[static_cast<size_t>(n)];
      c.require(std::abs(l.beta - edge) <= 1e-6 * edge,
                "edge " + num(edge) + " found at " + num(l.beta));
      c.require(std::abs(r.alpha - edge) <= 1e-6 * edge,
                "edge " + num(edge) + " found at " + num(r.alpha));
      c.require(l.kappa_beta == 2 && r.kappa_alpha == 2,
                "interior edge " + num(edge) + " not tangential");
    }
    c.require(std::abs(bs.standard[0].alpha) <= 1e-8,
              "bottom edge at " + num(bs.standard[0].alpha));
    c.require(bs.standard[0].kappa_alpha == 1, "bottom edge not transversal");
    c.require(bs.standard[0].has_delta() &&
                  std::abs(bs.standard[0].delta - M_PI * M_PI / 4.0) <= 1e-8,
              "delta_0 = " + num(bs.standard[0].delta) + " vs pi^2/4");
  });

  criterion(4, "cosine background: open first gap, unit determinant, step-halving", 60.0,
            [](Checks& c) {
    const PeriodicPotential v0 = mathieu();
    const BandStructure bs = compute_bands(v0, 40.0);
    c.require(bs.standard.size() >= 2, "fewer than two bands below 40");
    if (bs.standard.size() < 2) return;
    const double beta1 = bs.standard[0].beta;
    const double alpha2 = bs.standard[1].alpha;
    c.require(alpha2 - beta1 > 1e-3, "first gap width " + num(alpha2 - beta1));
    c.require(classify_edge(v0, beta1) == 1, "upper edge of band 0 not transversal");
    c.require(classify_edge(v0, alpha2) == 1, "lower edge of band 1 not transversal");

    IntegrationOptions fine;
    fine.refine = 2;
    double worst_det = 0.0, worst_step = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double E = -2.0 + 42.0 * i / 499.0;
      const MonodromyMatrix t = monodromy(v0, E);
      worst_det = std::max(worst_det, std::abs(t.det() - 1.0));
      worst_step = std::max(worst_step,
                            std::abs(t.trace() - monodromy(v0, E, fine).trace()));
    }
    c.require(worst_det <= 1e-9, "max |det - 1| = " + num(worst_det));
    c.require(worst_step <= 1e-6, "max discriminant step-halving change = " + num(worst_step));
  });

  criterion(5, "zero perturbation keeps amplitudes flat", 5.0, [](Checks& c) {
    const PruferTrajectory tr =
        prufer_integrate_continuum(free_potential(), Perturbation::zero(), 1.0, 100.0);
    c.require(tr.max_abs_ln_r <= 1e-8, "continuum |ln R| = " + num(tr.max_abs_ln_r));
    const DiscreteExtraction ex =
        prufer_extract_discrete(free_period(), Perturbation::zero(), 1.0, 100000);
    c.require(ex.traj.max_abs_ln_r <= 1e-10,
              "discrete |ln R| = " + num(ex.traj.max_abs_ln_r));
  });

  criterion(6, "resonant tail: build, re-detect, and budget one embedded point", 30.0,
            [](Checks& c) {
    const PeriodicPotential v0 = free_potential();
    const WvnConstruction w = wvn_construct_continuum(v0, 1.0, 2.0, 150.0);
    c.require(std::abs(w.exponent + 1.0) <= 0.05, "exponent " + num(w.exponent));
    c.require(std::abs(w.a_observed - 4.0) <= 0.5, "a_observed " + num(w.a_observed));

    const BandStructure bs = compute_bands(v0, 9.9);
    const EmbeddedSet found =
        detect_embedded(v0, w.V, bs.standard[0], 0, DetectOptions{});
    c.require(found.points.size() == 1,
              "expected 1 point, got " + num(static_cast<double>(found.points.size())));
    if (found.points.size() != 1) return;
    c.require(std::abs(found.points[0].energy - 1.0) <= 1e-3,
              "recovered E = " + num(found.points[0].energy));

    const BoundReport r =
        verify_sum_bound(bs.standard[0], 0, found.points, w.a_observed);
    c.require(std::abs(r.sum_inv_gamma_below - 1.0) <= 0.01,
              "sum 1/Gamma = " + num(r.sum_inv_gamma_below));
    c.require(r.pass(), "eigenvalue-sum budget violated");
  });

  criterion(7, "amplitude norms agree between horizons 60 and 120", 60.0, [](Checks& c) {
    struct Case {
      const char* name;
      PeriodicPotential v0;
      Perturbation V;
      double E;
    };
    std::vector<Case> cases;
    cases.push_back({"free+inverse_square", free_potential(),
                     Perturbation::inverse_square(1.0, 1.0 / 128.0, 120.0), 1.0});
    cases.push_back({"free+resonant", free_potential(),
                     wvn_construct_continuum(free_potential(), 1.0, 2.0, 120.0).V, 1.0});
    cases.push_back({"cosine+inverse", mathieu(),
                     Perturbation::inverse_decay(0.5, 1.0 / 128.0, 120.0), 4.0});
    for (const Case& k : cases) {
      const CrossValidation a = crossvalidate_continuum(k.v0, k.V, k.E, 60.0);
      const CrossValidation b = crossvalidate_continuum(k.v0, k.V, k.E, 120.0);
      c.require(std::isfinite(a.c_equiv) && a.c_equiv >= 1.0,
                std::string(k.name) + ": c_equiv(60) = " + num(a.c_equiv));
      c.require(std::isfinite(b.c_equiv) && b.c_equiv >= 1.0,
                std::string(k.name) + ": c_equiv(120) = " + num(b.c_equiv));
      c.require(std::abs(b.c_equiv / a.c_equiv - 1.0) <= 0.2,
                std::string(k.name) + ": c_equiv drifts " + num(a.c_equiv) + " -> " +
                    num(b.c_equiv));
    }
  });

  criterion(8, "1/(Gamma sin^2 k) maxima are grid-stable on cosine bands", 60.0,
            [](Checks& c) {
    const PeriodicPotential v0 = mathieu();
    const BandStructure bs = compute_bands(v0, 95.0);
    c.require(bs.standard.size() >= 3, "fewer than three bands below 95");
    for (size_t bi = 0; bi < 3 && bi < bs.standard.size(); ++bi) {
      const StandardBand& b = bs.standard[bi];
      const double g = 1e-3 * b.width();
      double coarse = 0.0, dense = 0.0;
      bool finite = true;
      for (int pts : {200, 399}) {
        double mx = 0.0;
        for (double E : linspace(b.alpha + g, b.beta - g, pts)) {
          const FloquetData fd = floquet_solution(v0, E);
          const double val = 1.0 / (fd.Gamma * std::sin(fd.k) * std::sin(fd.k));
          if (!std::isfinite(val)) finite = false;
          mx = std::max(mx, val);
        }
        (pts == 200 ? coarse : dense) = mx;
      }
      c.require(finite, "band " + num(static_cast<double>(bi)) + ": non-finite weight");
      const double change = std::abs(dense - coarse) / std::max(dense, coarse);
      c.require(change <= 0.10, "band " + num(static_cast<double>(bi)) +
                                    ": max moved by " + num(100.0 * change) + "%");
    }
  });

  criterion(9, "borderline-but-short-range tails produce no embedded points", 60.0,
            [](Checks& c) {
    const PeriodicPotential v0 = free_potential();
    const Perturbation V = Perturbation::log_inverse(1.0, 1.0 / 128.0, 150.0);
    const BandStructure bs = compute_bands(v0, 9.9);
    const EmbeddedSet found =
        detect_embedded(v0, V, bs.standard[0], 0, DetectOptions{});
    c.require(found.points.empty(),
              "found " + num(static_cast<double>(found.points.size())) + " points");
    double worst = 0.0;
    for (const ScanSample& s : found.scan) worst = std::min(worst, s.exponent);
    c.require(worst > -0.2, "scan exponent dipped to " + num(worst));
  });

  criterion(10, "discrete step-ratio identity holds along random resonant runs", 10.0,
            [](Checks& c) {
    const JacobiPeriod J = free_period();
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> dist(-1.9, 1.9);
    for (int trial = 0; trial < 3; ++trial) {
      const double E = dist(rng);
      const WvnConstruction w = wvn_construct_discrete(J, E, 1.5, 100000);
      const DiscreteExtraction ex = prufer_extract_discrete(J, w.V, E, 100000);
      c.require(ex.max_residual <= 1e-8,
                "E = " + num(E) + ": residual " + num(ex.max_residual));
    }
  });

  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
