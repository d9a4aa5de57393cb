#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "bandprufer/jacobi.hpp"
#include "bandprufer/periodic.hpp"

namespace bandprufer {

// Maximal interval with |D| < 2. kappa = 1 at an edge where D'(lambda) != 0
// (gap open on that side), kappa = 2 at a tangential (collapsed/degenerate)
// edge, kappa = 0 at a window-truncated end (not a true edge). delta is the
// in-band root of D = 0, NaN when the band was truncated by the window before
// D reached zero.
struct StandardBand {
  double alpha = 0.0, beta = 0.0;
  int kappa_alpha = 1, kappa_beta = 1;
  double delta = std::numeric_limits<double>::quiet_NaN();
  bool alpha_collapsed = false;   // shared with the previous band
  bool beta_collapsed = false;    // shared with the next band
  bool alpha_truncated = false;   // cut by the scan window, not a true edge
  bool beta_truncated = false;    // cut by the scan window, not a true edge
  double width() const { return beta - alpha; }
  bool contains(double E) const { return E > alpha && E < beta; }
  bool has_delta() const { return delta == delta; }
};

// Runs of standard bands glued at collapsed edges.
struct MergedBand {
  double alpha = 0.0, beta = 0.0;
  int first_band = 0, last_band = 0;  // indices into BandStructure::standard
};

struct BandStructure {
  std::vector<StandardBand> standard;
  std::vector<MergedBand> merged;
  double e_min = 0.0, e_max = 0.0;

  // Index of the standard band with E strictly inside, -1 if none.
  int band_containing(double E) const;
};

struct BandScanOptions {
  double points_per_unit = 10.0;
  int min_points = 64;
  double edge_tol = 1e-10;    // bisection width for edge locations
  double touch_tol = 1e-8;    // |D| - 2 window treated as a tangency
  double kappa_step = 1e-5;   // central-difference step for classify_edge
  double kappa_tau = 1e-4;    // |D'| above this means kappa = 1
  int threads = 0;
};

namespace detail {
// Band finder over an arbitrary discriminant function. Brackets on a uniform
// grid, refines extrema, locates D = +-2 crossings by bisection and
// tangencies by a sign change of the finite-difference derivative.
BandStructure find_bands(const std::function<double(double)>& disc, double e_min,
                         double e_max, const BandScanOptions& opts);
int classify_edge_of(const std::function<double(double)>& disc, double lambda,
                     const BandScanOptions& opts);
}  // namespace detail

BandStructure compute_bands(const PeriodicPotential& v0, double e_max,
                            BandScanOptions opts = {});

// kappa at a band edge; throws not-an-edge when |D(lambda)| is not 2.
int classify_edge(const PeriodicPotential& v0, double lambda, BandScanOptions opts = {});

BandStructure jacobi_bands(const JacobiPeriod& J, BandScanOptions opts = {});

int jacobi_classify_edge(const JacobiPeriod& J, double lambda, BandScanOptions opts = {});

}  // namespace bandprufer
