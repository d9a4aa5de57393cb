#include "bandprufer/bands.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bandprufer/util.hpp"

namespace bandprufer {

int BandStructure::band_containing(double E) const {
  for (size_t i = 0; i < standard.size(); ++i)
    if (standard[i].contains(E)) return static_cast<int>(i);
  return -1;
}

namespace detail {
namespace {

using DiscFn = std::function<double(double)>;

struct Event {
  double e = 0.0;
  bool touch = false;  // tangency (collapsed edge) rather than a crossing
};

// Golden-section search for an extremum of D on [a, b]; maximize controls the
// direction. Returns the refined abscissa; the caller re-evaluates D there.
double golden_extremum(const DiscFn& disc, double a, double b, bool maximize) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = disc(x1), f2 = disc(x2);
  if (!maximize) {
    f1 = -f1;
    f2 = -f2;
  }
  for (int it = 0; it < 160 && (b - a) > 1e-11 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = maximize ? disc(x1) : -disc(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = maximize ? disc(x2) : -disc(x2);
    }
  }
  return 0.5 * (a + b);
}

double bisect_level(const DiscFn& disc, double lo, double hi, double level, double tol) {
  double flo = disc(lo) - level;
  for (int it = 0; it < 240 && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = disc(mid) - level;
    if (fm == 0.0) return mid;
    if ((flo < 0.0) == (fm < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Locates a tangency by bisecting a smoothed finite-difference derivative of D
// around the refined extremum; far more accurate in E than extremum search on
// D itself, whose resolution degrades like the square root of the D noise.
double refine_touch(const DiscFn& disc, double e_ext, double grid_span) {
  const double h = 1e-3 * std::sqrt(std::max(1.0, std::abs(e_ext)));
  auto slope = [&](double e) { return disc(e + h) - disc(e - h); };
  double w = h;
  double lo = e_ext - w, hi = e_ext + w;
  double slo = slope(lo), shi = slope(hi);
  int grow = 0;
  while (slo * shi > 0.0 && grow < 24 && w < 4.0 * grid_span) {
    w *= 2.0;
    lo = e_ext - w;
    hi = e_ext + w;
    slo = slope(lo);
    shi = slope(hi);
    ++grow;
  }
  if (slo * shi > 0.0)
    throw NumericError("degenerate-edge",
                       "band scan: tangency derivative sign change not bracketed near E = " +
                           std::to_string(e_ext));
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sm = slope(mid);
    if (sm == 0.0) return mid;
    if ((slo < 0.0) == (sm < 0.0)) {
      lo = mid;
      slo = sm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

int classify_edge_of(const DiscFn& disc, double lambda, const BandScanOptions& opts) {
  const double d = disc(lambda);
  if (std::abs(std::abs(d) - 2.0) > 1e-6)
    throw NumericError("not-an-edge",
                       "classify_edge: |D| != 2 at E = " + std::to_string(lambda));
  const double h = opts.kappa_step;
  const double dp = (disc(lambda + h) - disc(lambda - h)) / (2.0 * h);
  return std::abs(dp) > opts.kappa_tau ? 1 : 2;
}

BandStructure find_bands(const DiscFn& disc, double e_min, double e_max,
                         const BandScanOptions& opts) {
  if (!(e_max > e_min)) throw NumericError("empty-spectrum-window", "band scan: empty window");

  const int npts =
      std::max(opts.min_points, static_cast<int>(std::ceil((e_max - e_min) * opts.points_per_unit))) + 1;
  const std::vector<double> grid = linspace(e_min, e_max, npts);
  std::vector<double> dv(grid.size());
  parallel_for(grid.size(), opts.threads, [&](size_t i) { dv[i] = disc(grid[i]); });
  const double spacing = (e_max - e_min) / (npts - 1);

  // Knots: the scan grid plus every refined critical point of D. Critical
  // points matter twice over: a narrow gap hides between grid points with
  // |D| < 2 at both, and a collapsed edge is itself a critical point.
  struct Knot {
    double e, d;
  };
  std::vector<Knot> knots;
  knots.reserve(grid.size() + 16);
  std::vector<Event> touches;
  for (size_t i = 0; i < grid.size(); ++i) {
    knots.push_back({grid[i], dv[i]});
    if (i + 2 < grid.size()) {
      const double s0 = dv[i + 1] - dv[i];
      const double s1 = dv[i + 2] - dv[i + 1];
      if (s0 * s1 < 0.0) {
        const bool maximize = s0 > 0.0;
        const double e_ext = golden_extremum(disc, grid[i], grid[i + 2], maximize);
        const double d_ext = disc(e_ext);
        if (std::abs(std::abs(d_ext) - 2.0) <= opts.touch_tol) {
          // Tangency: record the split point but keep it out of the knot list,
          // so the crossing detector never re-resolves the sub-tolerance
          // excursion as a would-be gap of its own.
          touches.push_back({refine_touch(disc, e_ext, spacing), true});
        } else {
          knots.push_back({e_ext, d_ext});
        }
      }
    }
  }
  std::sort(knots.begin(), knots.end(), [](const Knot& a, const Knot& b) { return a.e < b.e; });
  std::sort(touches.begin(), touches.end(), [](const Event& a, const Event& b) { return a.e < b.e; });
  touches.erase(std::unique(touches.begin(), touches.end(),
                            [](const Event& a, const Event& b) {
                              return std::abs(a.e - b.e) <= 1e-9 * std::max(1.0, std::abs(a.e));
                            }),
                touches.end());

  // Transversal +-2 crossings between adjacent knots.
  std::vector<Event> events = touches;
  for (size_t i = 0; i + 1 < knots.size(); ++i) {
    for (double level : {2.0, -2.0}) {
      const double fl = knots[i].d - level;
      const double fr = knots[i + 1].d - level;
      if (fl * fr < 0.0)
        events.push_back({bisect_level(disc, knots[i].e, knots[i + 1].e, level, opts.edge_tol), false});
    }
  }
  // A knot sitting exactly on a level defeats the sign-product test (both
  // adjacent products are zero); classify it by the nearest off-level
  // neighbours instead. The free operator hits this at E = 0, where the
  // discriminant equals +2 to the last bit on the scan grid.
  for (size_t i = 0; i < knots.size(); ++i) {
    for (double level : {2.0, -2.0}) {
      if (knots[i].d != level) continue;
      double s_prev = 0.0, s_next = 0.0;
      for (size_t j = i; j-- > 0;)
        if (knots[j].d != level) {
          s_prev = knots[j].d - level;
          break;
        }
      for (size_t j = i + 1; j < knots.size(); ++j)
        if (knots[j].d != level) {
          s_next = knots[j].d - level;
          break;
        }
      if (s_prev == 0.0 || s_next == 0.0) continue;  // runs into the window edge
      events.push_back({knots[i].e, s_prev * s_next > 0.0});
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.e < b.e; });
  events.erase(std::unique(events.begin(), events.end(),
                           [](const Event& a, const Event& b) {
                             return std::abs(a.e - b.e) <= 1e-12 * std::max(1.0, std::abs(a.e));
                           }),
               events.end());

  // Segment states between consecutive events.
  std::vector<double> bounds;
  bounds.push_back(e_min);
  for (const Event& ev : events) bounds.push_back(ev.e);
  bounds.push_back(e_max);
  std::vector<bool> in_band(bounds.size() - 1);
  for (size_t i = 0; i + 1 < bounds.size(); ++i)
    in_band[i] = std::abs(disc(0.5 * (bounds[i] + bounds[i + 1]))) < 2.0;

  BandStructure out;
  out.e_min = e_min;
  out.e_max = e_max;

  auto edge_kappa = [&](double lambda) { return classify_edge_of(disc, lambda, opts); };

  size_t seg = 0;
  while (seg < in_band.size()) {
    if (!in_band[seg]) {
      ++seg;
      continue;
    }
    // A maximal run of band segments; interior events in the run are touches.
    size_t last = seg;
    while (last + 1 < in_band.size() && in_band[last + 1]) ++last;

    const bool starts_at_window = seg == 0;
    const bool ends_at_window = last + 1 == in_band.size();
    std::vector<StandardBand> run;
    StandardBand cur;
    cur.alpha = bounds[seg];
    cur.alpha_truncated = starts_at_window;
    cur.kappa_alpha = starts_at_window ? 0 : edge_kappa(cur.alpha);
    for (size_t s = seg; s <= last; ++s) {
      const bool is_last_segment = s == last;
      cur.beta = bounds[s + 1];
      if (is_last_segment) {
        cur.beta_truncated = ends_at_window;
        cur.kappa_beta = ends_at_window ? 0 : edge_kappa(cur.beta);
      } else {
        // Interior event inside a band run: a collapsed (tangential) edge.
        cur.beta_collapsed = true;
        cur.kappa_beta = 2;
      }
      run.push_back(cur);
      cur = StandardBand{};
      cur.alpha = bounds[s + 1];
      cur.alpha_collapsed = !is_last_segment;
      cur.kappa_alpha = 2;
    }

    MergedBand mb;
    mb.alpha = run.front().alpha;
    mb.beta = run.back().beta;
    mb.first_band = static_cast<int>(out.standard.size());
    mb.last_band = static_cast<int>(out.standard.size() + run.size()) - 1;
    out.merged.push_back(mb);
    for (auto& sb : run) out.standard.push_back(sb);
    seg = last + 1;
  }

  if (out.standard.empty())
    throw NumericError("empty-spectrum-window", "band scan: no band below the window top");

  // In-band root of D for each band; D spans from +-2 to -+2 across a complete
  // band, so the sign change is taken just inside the edges.
  for (auto& sb : out.standard) {
    const double w = sb.width();
    const double lo = sb.alpha + 1e-3 * w;
    const double hi = sb.beta - 1e-3 * w;
    if (disc(lo) * disc(hi) < 0.0)
      sb.delta = bisect_level(disc, lo, hi, 0.0, opts.edge_tol);
  }
  return out;
}

}  // namespace detail

BandStructure compute_bands(const PeriodicPotential& v0, double e_max, BandScanOptions opts) {
  const double e_min = v0.min_value() - 1.0;
  if (!(e_max > e_min))
    throw NumericError("empty-spectrum-window", "compute_bands: window top below the potential minimum");
  return detail::find_bands([&](double E) { return discriminant(v0, E); }, e_min, e_max, opts);
}

int classify_edge(const PeriodicPotential& v0, double lambda, BandScanOptions opts) {
  return detail::classify_edge_of([&](double E) { return discriminant(v0, E); }, lambda, opts);
}

BandStructure jacobi_bands(const JacobiPeriod& J, BandScanOptions opts) {
  J.validate();
  const double lo = J.b_min() - 2.0 * J.a_max() - 1.0;
  const double hi = J.b_max() + 2.0 * J.a_max() + 1.0;
  return detail::find_bands([&](double E) { return jacobi_discriminant(J, E); }, lo, hi, opts);
}

int jacobi_classify_edge(const JacobiPeriod& J, double lambda, BandScanOptions opts) {
  return detail::classify_edge_of([&](double E) { return jacobi_discriminant(J, E); }, lambda, opts);
}

}  // namespace bandprufer
