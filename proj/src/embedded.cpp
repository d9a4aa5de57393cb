#include "bandprufer/embedded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bandprufer/util.hpp"

namespace bandprufer {

WvnConstruction wvn_construct_continuum(const PeriodicPotential& v0, double E,
                                        double amplitude, double x_max,
                                        ContinuumPruferOptions opts) {
  if (!(amplitude >= 0.0))
    throw std::invalid_argument("wvn_construct_continuum: amplitude must be >= 0");
  if (!(x_max >= 10.0)) throw std::invalid_argument("wvn_construct_continuum: x_max must be >= 10");

  const int m = v0.cells();
  int steps_per_unit = opts.steps_per_unit;
  if (steps_per_unit <= 0)
    steps_per_unit = continuum_steps_per_unit(v0, E, 512);
  else
    steps_per_unit = static_cast<int>(((steps_per_unit + m - 1) / m) * static_cast<long>(m));

  // The phase equation closes once the resonant tail is substituted in, so it
  // is integrated on the half step; that makes the produced table dense enough
  // to land on every node and midpoint of a consumer run at the same density.
  IntegrationOptions io;
  io.grid_multiple = 4 * steps_per_unit;
  const FloquetData fd = floquet_solution(v0, E, io);
  const long n_per = fd.steps;
  const long qstride = n_per / (4L * steps_per_unit);
  const double h2 = 0.5 / static_cast<double>(steps_per_unit);
  const long total = std::llround(x_max * 2.0 * steps_per_unit);

  auto gp = [&](long jq) {
    return fd.gamma_prime[static_cast<size_t>((jq * qstride) % n_per)];
  };
  const double a_r = amplitude;
  auto theta_rate = [a_r](double g, double x, double th) {
    const double s = std::sin(th);
    return g + 2.0 * a_r * std::sin(2.0 * th) * s * s / (1.0 + x);
  };
  auto lnr_rate = [a_r](double x, double th) {
    const double s2 = std::sin(2.0 * th);
    return -a_r * s2 * s2 / (1.0 + x);
  };

  WvnConstruction out;
  out.V.kind = Perturbation::Kind::coulomb_resonant;
  out.V.dx = h2;
  out.V.target_energy = E;
  out.V.resonant_amplitude = amplitude;
  out.V.values.resize(static_cast<size_t>(total) + 1);

  PruferTrajectory& traj = out.traj;
  const size_t cap = std::max<size_t>(2, opts.store_cap);
  const long dec = static_cast<long>(static_cast<size_t>(total) / (cap - 1)) + 1;
  const double fit_start = opts.fit_window_fraction * x_max;
  OlsAccumulator ols;

  double theta = opts.theta0;
  double lnr = 0.0;
  for (long j = 0; j <= total; ++j) {
    const double x = h2 * static_cast<double>(j);
    if (!std::isfinite(theta) || !std::isfinite(lnr))
      throw NumericError("stiff-integration", "resonant construction produced non-finite values");

    out.V.values[static_cast<size_t>(j)] =
        -2.0 * gp(2 * j) * a_r * std::sin(2.0 * theta) / (1.0 + x);

    if (std::abs(lnr) > traj.max_abs_ln_r) traj.max_abs_ln_r = std::abs(lnr);
    if (x >= fit_start) ols.add(std::log1p(x), lnr);
    if (j % dec == 0 || j == total) {
      traj.grid.push_back(x);
      traj.ln_r.push_back(lnr);
      traj.theta.push_back(theta);
    }
    if (j == total) break;

    const long jq = 2 * j;
    const double g0 = gp(jq), gh = gp(jq + 1), g1 = gp(jq + 2);
    const double xh = x + 0.5 * h2, x1 = x + h2;
    const double k1t = theta_rate(g0, x, theta);
    const double k1r = lnr_rate(x, theta);
    const double k2t = theta_rate(gh, xh, theta + 0.5 * h2 * k1t);
    const double k2r = lnr_rate(xh, theta + 0.5 * h2 * k1t);
    const double k3t = theta_rate(gh, xh, theta + 0.5 * h2 * k2t);
    const double k3r = lnr_rate(xh, theta + 0.5 * h2 * k2t);
    const double k4t = theta_rate(g1, x1, theta + h2 * k3t);
    const double k4r = lnr_rate(x1, theta + h2 * k3t);

    theta += h2 / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    const double incr = h2 / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
    // Every stage rate is non-positive, so the amplitude can never grow; a
    // positive increment means the integrator state is corrupt.
    if (incr > 0.0)
      throw NumericError("stiff-integration", "resonant construction lost monotonicity");
    lnr += incr;
  }

  out.V.measure_a_observed();
  out.a_observed = out.V.a_observed;
  traj.fit = ols.solve();
  traj.theta_end = theta;
  traj.x_end = h2 * static_cast<double>(total);
  out.exponent = traj.fit.slope;
  return out;
}

WvnConstruction wvn_construct_discrete(const JacobiPeriod& J, double E, double amplitude,
                                       long n_max, DiscretePruferOptions opts) {
  if (!(amplitude >= 0.0))
    throw std::invalid_argument("wvn_construct_discrete: amplitude must be >= 0");
  if (n_max < 10) throw std::invalid_argument("wvn_construct_discrete: n_max must be >= 10");

  const DiscreteFloquetData fd = jacobi_floquet(J, E);
  const double omega = fd.omega;
  const double karg = std::arg(fd.multiplier);
  const long q = fd.q;
  auto phi_at = [&](long n) -> std::complex<double> {
    long p = n / q;
    long r = n % q;
    if (r < 0) {
      r += q;
      --p;
    }
    const std::complex<double> base = fd.phi[static_cast<size_t>(r)];
    if (p == 0) return base;
    return std::polar(1.0, karg * static_cast<double>(p)) * base;
  };

  const std::complex<double> i_unit(0.0, 1.0);
  std::complex<double> c_cur = 0.5 * std::polar(1.0, opts.theta0 - std::arg(fd.phi[0]) - M_PI / 2.0);
  std::complex<double> phi_cur = phi_at(0);
  double theta = opts.theta0;
  double ln_offset = 0.0;

  WvnConstruction out;
  out.V.kind = Perturbation::Kind::coulomb_resonant;
  out.V.dx = 1.0;
  out.V.target_energy = E;
  out.V.resonant_amplitude = amplitude;
  out.V.values.assign(static_cast<size_t>(n_max) + 1, 0.0);

  PruferTrajectory& traj = out.traj;
  const size_t cap = std::max<size_t>(2, opts.store_cap);
  const long dec = static_cast<long>(static_cast<size_t>(n_max) / (cap - 1)) + 1;
  const double fit_start = opts.fit_window_fraction * static_cast<double>(n_max);
  OlsAccumulator ols;
  auto record = [&](long n, double lnr) {
    if (std::abs(lnr) > traj.max_abs_ln_r) traj.max_abs_ln_r = std::abs(lnr);
    if (static_cast<double>(n) >= fit_start) ols.add(std::log1p(static_cast<double>(n)), lnr);
    if (n % dec == 0 || n == n_max) {
      traj.grid.push_back(static_cast<double>(n));
      traj.ln_r.push_back(lnr);
      traj.theta.push_back(theta);
    }
  };
  record(0, std::log(2.0 * std::abs(c_cur)));

  for (long n = 0; n < n_max; ++n) {
    const std::complex<double> z = i_unit * c_cur * phi_cur;
    const double zn = std::abs(z);
    if (!(zn > 0.0))
      throw NumericError("stiff-integration", "resonant construction broke down");
    const double sin2t = 2.0 * (std::imag(z) / zn) * (std::real(z) / zn);
    const double p2 = std::norm(phi_cur);
    const double gamma_d = omega / (2.0 * p2);
    // First-order term of the step ratio is -V(n+1)(2/omega)sin(2theta)|phi|^2;
    // this choice of sign makes it -2 A sin^2(2theta)/(2+n), forcing decay.
    const double v = 2.0 * gamma_d * amplitude * sin2t / (2.0 + static_cast<double>(n));
    out.V.values[static_cast<size_t>(n) + 1] = v;

    const double u_cur = 2.0 * std::real(c_cur * phi_cur);
    const std::complex<double> c_next = c_cur + i_unit * v * u_cur * std::conj(phi_cur) / omega;
    const std::complex<double> phi_next = phi_at(n + 1);
    theta += std::arg(phi_next * std::conj(phi_cur)) + std::arg(c_next * std::conj(c_cur));
    c_cur = c_next;
    phi_cur = phi_next;

    if ((n + 1) % opts.renorm_every == 0) {
      const int ex = std::ilogb(std::abs(c_cur));
      if (std::abs(ex) >= 8 && ex != FP_ILOGB0) {
        const double scale = std::ldexp(1.0, -ex);
        c_cur *= scale;
        ln_offset += static_cast<double>(ex) * M_LN2;
      }
    }
    record(n + 1, ln_offset + std::log(2.0 * std::abs(c_cur)));
  }

  out.V.measure_a_observed();
  out.a_observed = out.V.a_observed;
  traj.fit = ols.solve();
  traj.theta_end = theta;
  traj.x_end = static_cast<double>(n_max);
  out.exponent = traj.fit.slope;
  return out;
}

namespace {

constexpr double kThetaProbes[2] = {0.0, M_PI / 2.0};

// Exponent probe at one energy and integration horizon: the smaller and the
// larger fitted exponent over the canonical initial phases, plus the phase
// realizing the smaller one. NaN marks an energy the engine refused (guard
// band near an edge).
struct Probe {
  double s_min = std::numeric_limits<double>::quiet_NaN();
  double s_max = std::numeric_limits<double>::quiet_NaN();
  double phase = 0.0;
};
using ProbeFn = std::function<Probe(double energy, double horizon)>;

double golden_min(const std::function<double(double)>& f, double a, double b, double tol) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// A resonance has two grid signatures. The decaying solution's exponent dip is
// extremely narrow (the decaying direction is dynamically unstable, so the
// basin shrinks like 1/horizon^2), but its dual grows at +A/2 over a much
// wider coherence window. The scan therefore runs at a short horizon and takes
// candidates from either a dip of the minimal exponent or a spike of the
// maximal one; each candidate is then pinned down by a horizon-doubling ladder
// whose search bracket shrinks fourfold per doubling, tracking the basin.
EmbeddedSet detect_impl(const ProbeFn& probe, const std::function<double(double)>& gamma_of,
                        const StandardBand& band, int band_index, const DetectOptions& opts,
                        double h_scan, double h_full) {
  const int n = std::max(2, opts.grid_size);
  const double width = band.width();
  const double spacing = width / n;
  std::vector<double> energies(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    energies[static_cast<size_t>(i)] = band.alpha + (i + 0.5) * spacing;

  std::vector<Probe> scan(static_cast<size_t>(n));
  parallel_for(static_cast<size_t>(n), opts.threads,
               [&](size_t i) { scan[i] = probe(energies[i], h_scan); });

  EmbeddedSet out;
  out.scan.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    if (scan[static_cast<size_t>(i)].s_min == scan[static_cast<size_t>(i)].s_min)
      out.scan.push_back({energies[static_cast<size_t>(i)], scan[static_cast<size_t>(i)].s_min});

  // Candidate flags on the scan grid.
  std::vector<char> flag(static_cast<size_t>(n), 0);
  for (int i = 1; i + 1 < n; ++i) {
    const Probe& c = scan[static_cast<size_t>(i)];
    const Probe& l = scan[static_cast<size_t>(i) - 1];
    const Probe& r = scan[static_cast<size_t>(i) + 1];
    if (c.s_min != c.s_min || l.s_min != l.s_min || r.s_min != r.s_min) continue;
    const bool dip =
        c.s_min < opts.candidate_threshold && c.s_min <= l.s_min && c.s_min <= r.s_min;
    const bool spike =
        c.s_max > -opts.candidate_threshold && c.s_max >= l.s_max && c.s_max >= r.s_max;
    if (dip || spike) flag[static_cast<size_t>(i)] = 1;
  }

  // One representative per run of flagged neighbours: the strongest signature.
  std::vector<int> reps;
  for (int i = 1; i + 1 < n && static_cast<int>(reps.size()) < 16;) {
    if (!flag[static_cast<size_t>(i)]) {
      ++i;
      continue;
    }
    int best = i;
    int j = i;
    while (j + 1 < n && flag[static_cast<size_t>(j) + 1]) {
      ++j;
      if (std::min(scan[static_cast<size_t>(j)].s_min, -scan[static_cast<size_t>(j)].s_max) <
          std::min(scan[static_cast<size_t>(best)].s_min, -scan[static_cast<size_t>(best)].s_max))
        best = j;
    }
    reps.push_back(best);
    i = j + 1;
  }

  const double member_cut = -0.5 - opts.margin;
  const double lo_guard = band.alpha + 1e-9 * std::max(1.0, std::abs(band.alpha));
  const double hi_guard = band.beta - 1e-9 * std::max(1.0, std::abs(band.beta));
  std::vector<EmbeddedPoint> found;
  for (int rep : reps) {
    double e_star = energies[static_cast<size_t>(rep)];
    double w = spacing;
    double h = h_scan;
    for (;;) {
      auto f = [&](double e) {
        if (e < lo_guard || e > hi_guard) return 1.0;
        const Probe p = probe(e, h);
        return p.s_min != p.s_min ? 1.0 : p.s_min;
      };
      // 17-point sub-grid to survive the non-unimodal shoulders, then a golden
      // pass inside the winning cell.
      int best_k = 8;
      double best_f = f(e_star);
      for (int k = 0; k <= 16; ++k) {
        if (k == 8) continue;
        const double e = e_star + (k - 8) * (w / 8.0);
        const double fe = f(e);
        if (fe < best_f) {
          best_f = fe;
          best_k = k;
        }
      }
      const double e_mid = e_star + (best_k - 8) * (w / 8.0);
      const double step = w / 8.0;
      const double scale = std::max(1.0, std::abs(e_mid));
      // The basin keeps shrinking like 1/h^2, so the search may need to beat
      // refine_tol long before the horizon tops out; only FP noise caps it.
      const double tol = std::max(step / 64.0, 1e-12 * scale);
      e_star = golden_min(f, e_mid - step, e_mid + step, tol);
      if (h >= h_full) break;
      h = std::min(2.0 * h, h_full);
      w = std::max(w / 4.0, 1e-11 * scale);
    }
    const Probe final_probe = probe(e_star, h_full);
    if (final_probe.s_min == final_probe.s_min && final_probe.s_min < member_cut) {
      EmbeddedPoint pt;
      pt.energy = e_star;
      pt.exponent = final_probe.s_min;
      pt.theta0 = final_probe.phase;
      pt.band_index = band_index;
      found.push_back(pt);
    }
  }

  // Cluster refinements that converged to the same resonance.
  std::sort(found.begin(), found.end(),
            [](const EmbeddedPoint& a, const EmbeddedPoint& b) { return a.energy < b.energy; });
  const double merge_dist = 0.5 * spacing;
  for (const EmbeddedPoint& pt : found) {
    if (!out.points.empty() && pt.energy - out.points.back().energy < merge_dist) {
      if (pt.exponent < out.points.back().exponent) out.points.back() = pt;
      continue;
    }
    out.points.push_back(pt);
  }
  for (EmbeddedPoint& pt : out.points) {
    pt.gamma = gamma_of(pt.energy);
    pt.side = (band.has_delta() && pt.energy > band.delta) ? DeltaSide::above : DeltaSide::below;
  }
  return out;
}

}  // namespace

EmbeddedSet detect_embedded(const PeriodicPotential& v0, const Perturbation& V,
                            const StandardBand& band, int band_index, DetectOptions opts) {
  const double x_full = opts.x_max > 0.0 ? opts.x_max : 150.0;
  const double x_scan = std::min(x_full, 20.0);
  ProbeFn probe = [&v0, &V, &opts](double E, double horizon) {
    Probe out;
    for (double th0 : kThetaProbes) {
      try {
        ContinuumPruferOptions po;
        po.theta0 = th0;
        po.steps_per_unit = continuum_steps_per_unit(v0, E, opts.steps_per_unit_base);
        po.store_cap = 2;  // probe runs only need the fit
        const PruferTrajectory traj = prufer_integrate_continuum(v0, V, E, horizon, po);
        if (out.s_min != out.s_min || traj.fit.slope < out.s_min) {
          out.s_min = traj.fit.slope;
          out.phase = th0;
        }
        if (out.s_max != out.s_max || traj.fit.slope > out.s_max) out.s_max = traj.fit.slope;
      } catch (const NumericError&) {
        // guard band or stiffness at this energy: leave NaN / keep other phase
      }
    }
    return out;
  };
  return detect_impl(probe, [&](double E) { return floquet_solution(v0, E).Gamma; }, band,
                     band_index, opts, x_scan, x_full);
}

EmbeddedSet detect_embedded(const JacobiPeriod& J, const Perturbation& V,
                            const StandardBand& band, int band_index, DetectOptions opts) {
  const long n_full = opts.n_max > 0 ? opts.n_max : 20000;
  const long n_scan = std::min<long>(n_full, 200);
  ProbeFn probe = [&J, &V](double E, double horizon) {
    Probe out;
    for (double th0 : kThetaProbes) {
      try {
        DiscretePruferOptions po;
        po.theta0 = th0;
        po.store_cap = 2;
        const DiscreteExtraction ex =
            prufer_extract_discrete(J, V, E, std::max<long>(10, std::llround(horizon)), po);
        if (out.s_min != out.s_min || ex.traj.fit.slope < out.s_min) {
          out.s_min = ex.traj.fit.slope;
          out.phase = th0;
        }
        if (out.s_max != out.s_max || ex.traj.fit.slope > out.s_max) out.s_max = ex.traj.fit.slope;
      } catch (const NumericError&) {
      }
    }
    return out;
  };
  return detect_impl(probe, [&](double E) { return jacobi_floquet(J, E).Gamma; }, band,
                     band_index, opts, static_cast<double>(n_scan),
                     static_cast<double>(n_full));
}

namespace {
template <typename Core>
EmbeddedSet detect_all(const Core& detect_one, const BandStructure& bands) {
  EmbeddedSet all;
  for (size_t i = 0; i < bands.standard.size(); ++i) {
    EmbeddedSet one = detect_one(bands.standard[i], static_cast<int>(i));
    all.points.insert(all.points.end(), one.points.begin(), one.points.end());
    all.scan.insert(all.scan.end(), one.scan.begin(), one.scan.end());
  }
  std::sort(all.points.begin(), all.points.end(),
            [](const EmbeddedPoint& a, const EmbeddedPoint& b) { return a.energy < b.energy; });
  std::sort(all.scan.begin(), all.scan.end(),
            [](const ScanSample& a, const ScanSample& b) { return a.energy < b.energy; });
  return all;
}
}  // namespace

EmbeddedSet detect_embedded_all(const PeriodicPotential& v0, const Perturbation& V,
                                const BandStructure& bands, DetectOptions opts) {
  return detect_all(
      [&](const StandardBand& b, int i) { return detect_embedded(v0, V, b, i, opts); }, bands);
}

EmbeddedSet detect_embedded_all(const JacobiPeriod& J, const Perturbation& V,
                                const BandStructure& bands, DetectOptions opts) {
  return detect_all(
      [&](const StandardBand& b, int i) { return detect_embedded(J, V, b, i, opts); }, bands);
}

BoundReport verify_sum_bound(const StandardBand& band, int band_index,
                             const std::vector<EmbeddedPoint>& points, double a_budget) {
  BoundReport r;
  r.band_index = band_index;
  r.delta = band.delta;
  r.rhs = 0.5 * a_budget * a_budget;
  for (const EmbeddedPoint& p : points) {
    if (!band.contains(p.energy)) continue;
    const double inv_gamma = 1.0 / p.gamma;
    if (band.has_delta() && p.energy > band.delta)
      r.sum_inv_gamma_above += inv_gamma;
    else
      r.sum_inv_gamma_below += inv_gamma;
  }
  r.below_pass = r.sum_inv_gamma_below <= r.rhs + r.tolerance;
  r.above_pass = r.sum_inv_gamma_above <= r.rhs + r.tolerance;
  return r;
}

std::vector<BoundCheck> derived_bounds_report(OperatorClass op, const BandStructure& bands,
                                              const std::vector<EmbeddedPoint>& points,
                                              double a_budget, bool free_background) {
  const double a2 = a_budget * a_budget;
  const double inf = std::numeric_limits<double>::infinity();

  double edge_power = 0.0, edge_square = 0.0, merged_sum = 0.0, dist_sq = 0.0;
  double energy_sum = 0.0, band_weight = 0.0;
  for (const EmbeddedPoint& p : points) {
    const int bi = bands.band_containing(p.energy);
    if (bi < 0) continue;
    const StandardBand& b = bands.standard[static_cast<size_t>(bi)];
    const double da = p.energy - b.alpha;
    const double db = b.beta - p.energy;
    const double ta = b.kappa_alpha == 0 ? inf : std::pow(da, b.kappa_alpha);
    const double tb = b.kappa_beta == 0 ? inf : std::pow(db, b.kappa_beta);
    if (std::min(ta, tb) < inf) edge_power += std::min(ta, tb);
    edge_square += std::min(da * da, db * db);

    for (const MergedBand& mb : bands.merged)
      if (p.energy > mb.alpha && p.energy < mb.beta) {
        merged_sum += std::min(p.energy - mb.alpha, mb.beta - p.energy);
        break;
      }

    if (op == OperatorClass::discrete) {
      double d = inf;
      for (const StandardBand& sb : bands.standard) {
        if (!sb.alpha_truncated) d = std::min(d, std::abs(p.energy - sb.alpha));
        if (!sb.beta_truncated) d = std::min(d, std::abs(p.energy - sb.beta));
      }
      if (d < inf) dist_sq += d * d;
    }
    if (free_background) {
      if (op == OperatorClass::continuum && p.energy > 0.0) energy_sum += p.energy;
      if (op == OperatorClass::discrete) band_weight += 4.0 - p.energy * p.energy;
    }
  }

  auto k_row = [&](const std::string& name, double lhs) {
    BoundCheck c;
    c.name = name;
    c.lhs = lhs;
    c.explicit_constant = false;
    c.implied_k = a2 > 0.0 ? lhs / a2 : (lhs > 0.0 ? inf : 0.0);
    c.pass = true;
    return c;
  };
  auto explicit_row = [&](const std::string& name, double lhs, double rhs) {
    BoundCheck c;
    c.name = name;
    c.lhs = lhs;
    c.rhs = rhs;
    c.explicit_constant = true;
    c.pass = lhs <= rhs + 1e-9;
    return c;
  };

  std::vector<BoundCheck> rows;
  rows.push_back(k_row("edge_power_sum", edge_power));
  rows.push_back(k_row("edge_square_sum", edge_square));
  rows.push_back(k_row("merged_edge_sum", merged_sum));
  if (op == OperatorClass::discrete) rows.push_back(k_row("edge_distance_sq_sum", dist_sq));
  if (free_background && op == OperatorClass::continuum)
    rows.push_back(explicit_row("energy_sum_free", energy_sum, 0.5 * a2));
  if (free_background && op == OperatorClass::discrete)
    rows.push_back(explicit_row("band_weight_sum_free", band_weight,
                                4.0 * a2 + 4.0 * std::min(1.0, a_budget)));
  return rows;
}

}  // namespace bandprufer
