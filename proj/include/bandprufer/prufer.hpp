#pragma once

#include <vector>

#include "bandprufer/jacobi.hpp"
#include "bandprufer/periodic.hpp"
#include "bandprufer/util.hpp"

namespace bandprufer {

// Decaying perturbation, stored as samples: continuum tables hold V(j * dx)
// over [0, x_end]; discrete tables hold V(n) per site with dx = 1. Reads past
// the table return 0.
struct Perturbation {
  enum class Kind { tabulated, coulomb_resonant };

  Kind kind = Kind::tabulated;
  double dx = 1.0;
  std::vector<double> values;
  double a_observed = 0.0;  // sup of x|V(x)| over the stored tail (last decade)

  // Construction parameters when kind == coulomb_resonant.
  double target_energy = 0.0;
  double resonant_amplitude = 0.0;

  double x_end() const { return values.empty() ? 0.0 : dx * static_cast<double>(values.size() - 1); }
  double at(double x) const;          // linear interpolation between samples
  double at_site(long n) const;       // discrete lookup
  void measure_a_observed();

  static Perturbation zero();
  // V(x) = amp / (1 + x), sampled at spacing dx on [0, x_max].
  static Perturbation inverse_decay(double amp, double dx, double x_max);
  // V(x) = amp / (1 + x)^2.
  static Perturbation inverse_square(double amp, double dx, double x_max);
  // V(x) = amp / ((1 + x) ln(2 + x)).
  static Perturbation log_inverse(double amp, double dx, double x_max);
  static Perturbation from_samples(std::vector<double> values, double dx);
  // Discrete variants: V(n) = amp/(1+n), amp/(1+n)^2 at integer sites.
  static Perturbation inverse_decay_discrete(double amp, long n_max);
  static Perturbation inverse_square_discrete(double amp, long n_max);
};

enum class SquareSummable { yes, no, indeterminate };

// Decision rule on the fitted tail exponent s of ln R against ln(1 + x):
// s < -1/2 - margin -> yes, s > -1/2 + margin -> no, else indeterminate.
SquareSummable classify_decay(const OlsFit& fit, double margin = 0.05);

struct PruferTrajectory {
  std::vector<double> grid;   // x (continuum) or n (discrete), decimated
  std::vector<double> ln_r;
  std::vector<double> theta;  // unwrapped phase
  OlsFit fit;                 // ln R against ln(1 + x) over the tail window
  double max_abs_ln_r = 0.0;  // over every integration step, not just stored nodes
  double theta_end = 0.0;
  double x_end = 0.0;
};

struct ContinuumPruferOptions {
  double theta0 = 0.0;
  int steps_per_unit = 0;            // 0: default rule tied to sqrt(E) and the cell count
  double fit_window_fraction = 0.1;  // fit over x >= fraction * x_max
  size_t store_cap = 100001;         // decimate stored nodes to at most this many
};

// Default integrator density: the smallest multiple of the potential's cell
// count at or above 512 * max(1, ceil(sqrt(E))) (256 in the scan-lean variant).
int continuum_steps_per_unit(const PeriodicPotential& v0, double E, int base = 512);

// Joint fixed-step integration of the phase and log-amplitude equations
//   theta' = gamma' - (V / gamma') sin^2(theta)
//   [ln R]' = (V / (2 gamma')) sin(2 theta)
// driven by the Floquet phase density gamma' of the background.
PruferTrajectory prufer_integrate_continuum(const PeriodicPotential& v0,
                                            const Perturbation& V, double E,
                                            double x_max,
                                            ContinuumPruferOptions opts = {});

struct CrossValidation {
  PruferTrajectory prufer;
  std::vector<double> ln_r_direct;  // ln(2|c|) from the direct solve, on prufer.grid
  OlsFit fit_direct;
  double drift = 0.0;        // sup |ln R_direct - ln R_prufer - const|
  double ratio_min = 0.0;    // extremes of R^2 / (u^2 + u'^2) over all steps
  double ratio_max = 0.0;
  double c_equiv = 0.0;      // sqrt(ratio_max / ratio_min), scale-free sandwich constant
};

// Integrates the Prufer system and the underlying Schrodinger equation side by
// side from matched initial data, extracting the amplitude from the direct
// solution via the Wronskian with the Floquet basis.
CrossValidation crossvalidate_continuum(const PeriodicPotential& v0,
                                        const Perturbation& V, double E, double x_max,
                                        ContinuumPruferOptions opts = {});

struct DiscretePruferOptions {
  double theta0 = 0.0;
  double fit_window_fraction = 0.1;
  long renorm_every = 1000;
  double residual_guard = 1e-6;  // hard failure threshold on the step identity
  size_t store_cap = 1000001;
};

struct DiscreteExtraction {
  PruferTrajectory traj;
  double max_residual = 0.0;  // worst relative residual of the step ratio identity
};

// Runs the perturbed recursion directly, extracts the Floquet coefficient
// c(n) = W_a(u, conj(phi))(n-1) / (-i omega), sets R(n) = 2|c(n)| and
// theta(n) = arg phi(n) + arg c(n) + pi/2, and checks at every step that
//   R(n+1)^2/R(n)^2 = 1 - V(n+1) (2/omega) sin(2 theta(n)) |phi(n)|^2
//                       + (4 V(n+1)^2 |phi(n)|^4 / omega^2) sin^2(theta(n)).
DiscreteExtraction prufer_extract_discrete(const JacobiPeriod& J, const Perturbation& V,
                                           double E, long n_max,
                                           DiscretePruferOptions opts = {});

}  // namespace bandprufer
