#include "bandprufer/prufer.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace bandprufer {

double Perturbation::at(double x) const {
  if (values.empty()) return 0.0;
  const double t = x / dx;
  if (t <= 0.0) return values.front();
  const double last = static_cast<double>(values.size() - 1);
  if (t > last) return 0.0;
  if (t == last) return values.back();
  const size_t i = static_cast<size_t>(t);
  const double f = t - static_cast<double>(i);
  return values[i] * (1.0 - f) + values[i + 1] * f;
}

double Perturbation::at_site(long n) const {
  if (n < 0 || n >= static_cast<long>(values.size())) return 0.0;
  return values[static_cast<size_t>(n)];
}

void Perturbation::measure_a_observed() {
  a_observed = 0.0;
  if (values.empty()) return;
  // Tail = last decade of the stored window, the finite-truncation stand-in
  // for a limsup at infinity.
  const size_t n = values.size();
  for (size_t i = (n - 1) / 10; i < n; ++i) {
    const double x = dx * static_cast<double>(i);
    a_observed = std::max(a_observed, x * std::abs(values[i]));
  }
}

namespace {
Perturbation tabulate(double dx, double x_max, const std::function<double(double)>& f) {
  Perturbation p;
  p.dx = dx;
  const size_t n = static_cast<size_t>(std::ceil(x_max / dx)) + 1;
  p.values.resize(n);
  for (size_t i = 0; i < n; ++i) p.values[i] = f(dx * static_cast<double>(i));
  p.measure_a_observed();
  return p;
}
}  // namespace

Perturbation Perturbation::zero() { return Perturbation{}; }

Perturbation Perturbation::inverse_decay(double amp, double dx, double x_max) {
  return tabulate(dx, x_max, [amp](double x) { return amp / (1.0 + x); });
}

Perturbation Perturbation::inverse_square(double amp, double dx, double x_max) {
  return tabulate(dx, x_max, [amp](double x) { return amp / ((1.0 + x) * (1.0 + x)); });
}

Perturbation Perturbation::log_inverse(double amp, double dx, double x_max) {
  return tabulate(dx, x_max, [amp](double x) { return amp / ((1.0 + x) * std::log(2.0 + x)); });
}

Perturbation Perturbation::from_samples(std::vector<double> values, double dx) {
  Perturbation p;
  p.dx = dx;
  p.values = std::move(values);
  p.measure_a_observed();
  return p;
}

Perturbation Perturbation::inverse_decay_discrete(double amp, long n_max) {
  Perturbation p;
  p.dx = 1.0;
  p.values.resize(static_cast<size_t>(n_max) + 1);
  for (long n = 0; n <= n_max; ++n)
    p.values[static_cast<size_t>(n)] = amp / (1.0 + static_cast<double>(n));
  p.measure_a_observed();
  return p;
}

Perturbation Perturbation::inverse_square_discrete(double amp, long n_max) {
  Perturbation p;
  p.dx = 1.0;
  p.values.resize(static_cast<size_t>(n_max) + 1);
  for (long n = 0; n <= n_max; ++n) {
    const double d = 1.0 + static_cast<double>(n);
    p.values[static_cast<size_t>(n)] = amp / (d * d);
  }
  p.measure_a_observed();
  return p;
}

SquareSummable classify_decay(const OlsFit& fit, double margin) {
  if (fit.slope < -0.5 - margin) return SquareSummable::yes;
  if (fit.slope > -0.5 + margin) return SquareSummable::no;
  return SquareSummable::indeterminate;
}

int continuum_steps_per_unit(const PeriodicPotential& v0, double E, int base) {
  const int m = v0.cells();
  const double target = base * std::max(1.0, std::sqrt(std::max(E, 0.0)));
  const long mult = std::max(1L, static_cast<long>(std::ceil(target / m)));
  return static_cast<int>(mult * m);
}

namespace {

struct ContinuumRun {
  PruferTrajectory traj;
  std::vector<double> ln_r_direct;
  OlsFit fit_direct;
  double drift = 0.0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
};

// Joint fixed-step integration of the phase/log-amplitude system, optionally
// co-integrating the underlying second-order equation for cross-validation.
// Steps nest inside the background's cells and the Floquet phase density is
// sampled on a grid the RK4 stages index exactly, so no interpolation of
// gamma' is involved.
ContinuumRun run_continuum(const PeriodicPotential& v0, const Perturbation& V, double E,
                           double x_max, const ContinuumPruferOptions& opts, bool direct) {
  if (!(x_max >= 10.0))
    throw std::invalid_argument("prufer_integrate_continuum: x_max must be >= 10");

  const int m = v0.cells();
  int steps_per_unit = opts.steps_per_unit;
  if (steps_per_unit <= 0)
    steps_per_unit = continuum_steps_per_unit(v0, E, 512);
  else
    steps_per_unit = static_cast<int>(((steps_per_unit + m - 1) / m) * static_cast<long>(m));

  IntegrationOptions io;
  io.grid_multiple = 2 * steps_per_unit;
  const FloquetData fd = floquet_solution(v0, E, io);
  const long n_per = fd.steps;
  const long half_stride = n_per / (2L * steps_per_unit);
  const long stride = 2 * half_stride;
  const double h = 1.0 / static_cast<double>(steps_per_unit);
  const double hd = 0.5 * h;
  const long total = std::llround(x_max * steps_per_unit);
  const long cells_mult = steps_per_unit / m;  // steps per potential cell

  std::vector<double> vhalf(static_cast<size_t>(2 * total) + 1);
  for (long j = 0; j < static_cast<long>(vhalf.size()); ++j)
    vhalf[static_cast<size_t>(j)] = V.at(hd * static_cast<double>(j));
  auto gp = [&](long jhalf) {
    return fd.gamma_prime[static_cast<size_t>((jhalf * half_stride) % n_per)];
  };

  const double theta0 = opts.theta0;
  const std::complex<double> c0 =
      0.5 * std::polar(1.0, theta0 - std::arg(fd.phi[0]) - M_PI / 2.0);
  double theta = theta0;
  double lnr = 0.0;
  double u = 2.0 * std::real(c0 * fd.phi[0]);
  double w = 2.0 * std::real(c0 * fd.dphi[0]);

  const double karg = std::arg(fd.multiplier);
  auto phi_node = [&](long j, bool derivative) {
    const long g = j * stride;
    long p = g / n_per;
    long r = g % n_per;
    const std::complex<double> base =
        derivative ? fd.dphi[static_cast<size_t>(r)] : fd.phi[static_cast<size_t>(r)];
    if (p == 0) return base;
    return std::polar(1.0, karg * static_cast<double>(p)) * base;
  };

  ContinuumRun out;
  PruferTrajectory& traj = out.traj;
  const size_t cap = std::max<size_t>(2, opts.store_cap);
  const long dec = static_cast<long>(static_cast<size_t>(total) / (cap - 1)) + 1;
  traj.grid.reserve(static_cast<size_t>(total / dec) + 2);

  const double fit_start = opts.fit_window_fraction * x_max;
  OlsAccumulator ols, ols_direct;
  double dmin = 0.0, dmax = 0.0, lr_min = 0.0, lr_max = 0.0;
  bool first_node = true;

  auto theta_rate = [](double g, double v, double th) {
    const double s = std::sin(th);
    return g - (v / g) * s * s;
  };
  auto lnr_rate = [](double g, double v, double th) { return (v / (2.0 * g)) * std::sin(2.0 * th); };

  for (long j = 0; j <= total; ++j) {
    const double x = h * static_cast<double>(j);

    if (!std::isfinite(theta) || !std::isfinite(lnr) || (direct && !std::isfinite(u)))
      throw NumericError("stiff-integration", "prufer integration produced non-finite values");

    if (std::abs(lnr) > traj.max_abs_ln_r) traj.max_abs_ln_r = std::abs(lnr);
    if (x >= fit_start) ols.add(std::log1p(x), lnr);

    double lnr_tilde = 0.0;
    if (direct) {
      const std::complex<double> phi = phi_node(j, false);
      const std::complex<double> dphi = phi_node(j, true);
      const std::complex<double> wr = std::conj(phi) * w - std::conj(dphi) * u;
      lnr_tilde = std::log(2.0 * std::abs(wr) / fd.omega);
      const double diff = lnr_tilde - lnr;
      const double lrho = 2.0 * lnr - std::log(u * u + w * w);
      if (first_node) {
        dmin = dmax = diff;
        lr_min = lr_max = lrho;
        first_node = false;
      } else {
        dmin = std::min(dmin, diff);
        dmax = std::max(dmax, diff);
        lr_min = std::min(lr_min, lrho);
        lr_max = std::max(lr_max, lrho);
      }
      if (x >= fit_start) ols_direct.add(std::log1p(x), lnr_tilde);
    }

    if (j % dec == 0 || j == total) {
      traj.grid.push_back(x);
      traj.ln_r.push_back(lnr);
      traj.theta.push_back(theta);
      if (direct) out.ln_r_direct.push_back(lnr_tilde);
    }
    if (j == total) break;

    const long jh = 2 * j;
    const double g0 = gp(jh), gh = gp(jh + 1), g1 = gp(jh + 2);
    const double v0s = vhalf[static_cast<size_t>(jh)];
    const double vhs = vhalf[static_cast<size_t>(jh) + 1];
    const double v1s = vhalf[static_cast<size_t>(jh) + 2];

    const double k1t = theta_rate(g0, v0s, theta);
    const double k1r = lnr_rate(g0, v0s, theta);
    const double k2t = theta_rate(gh, vhs, theta + 0.5 * h * k1t);
    const double k2r = lnr_rate(gh, vhs, theta + 0.5 * h * k1t);
    const double k3t = theta_rate(gh, vhs, theta + 0.5 * h * k2t);
    const double k3r = lnr_rate(gh, vhs, theta + 0.5 * h * k2t);
    const double k4t = theta_rate(g1, v1s, theta + h * k3t);
    const double k4r = lnr_rate(g1, v1s, theta + h * k3t);

    if (direct) {
      const double qb = v0.values()[static_cast<size_t>((j % steps_per_unit) / cells_mult)] - E;
      const double q0 = qb + v0s, qh = qb + vhs, q1 = qb + v1s;
      const double k1u = w, k1w = q0 * u;
      const double k2u = w + 0.5 * h * k1w, k2w = qh * (u + 0.5 * h * k1u);
      const double k3u = w + 0.5 * h * k2w, k3w = qh * (u + 0.5 * h * k2u);
      const double k4u = w + h * k3w, k4w = q1 * (u + h * k3u);
      u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
      w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }

    theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    lnr += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  }

  traj.fit = ols.solve();
  traj.theta_end = theta;
  traj.x_end = h * static_cast<double>(total);
  if (direct) {
    out.fit_direct = ols_direct.solve();
    out.drift = 0.5 * (dmax - dmin);
    out.ratio_min = std::exp(lr_min);
    out.ratio_max = std::exp(lr_max);
  }
  return out;
}

}  // namespace

PruferTrajectory prufer_integrate_continuum(const PeriodicPotential& v0, const Perturbation& V,
                                            double E, double x_max, ContinuumPruferOptions opts) {
  return run_continuum(v0, V, E, x_max, opts, false).traj;
}

CrossValidation crossvalidate_continuum(const PeriodicPotential& v0, const Perturbation& V,
                                        double E, double x_max, ContinuumPruferOptions opts) {
  ContinuumRun run = run_continuum(v0, V, E, x_max, opts, true);
  CrossValidation cv;
  cv.prufer = std::move(run.traj);
  cv.ln_r_direct = std::move(run.ln_r_direct);
  cv.fit_direct = run.fit_direct;
  cv.drift = run.drift;
  cv.ratio_min = run.ratio_min;
  cv.ratio_max = run.ratio_max;
  cv.c_equiv = std::sqrt(run.ratio_max / run.ratio_min);
  return cv;
}

DiscreteExtraction prufer_extract_discrete(const JacobiPeriod& J, const Perturbation& V,
                                           double E, long n_max, DiscretePruferOptions opts) {
  if (n_max < 10) throw std::invalid_argument("prufer_extract_discrete: n_max must be >= 10");
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
  std::complex<double> c_cur =
      0.5 * std::polar(1.0, opts.theta0 - std::arg(fd.phi[0]) - M_PI / 2.0);
  std::complex<double> phi_prev = phi_at(-1);
  std::complex<double> phi_cur = phi_at(0);
  double u_prev = 2.0 * std::real(c_cur * phi_prev);  // u(-1)
  double u_cur = 2.0 * std::real(c_cur * phi_cur);    // u(0)
  double theta = opts.theta0;
  double ln_offset = 0.0;

  DiscreteExtraction out;
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
  record(0, ln_offset + std::log(2.0 * std::abs(c_cur)));

  for (long n = 0; n < n_max; ++n) {
    const double v = V.at_site(n + 1);
    const std::complex<double> phi_next = phi_at(n + 1);

    const double u_next =
        ((E - J.b_at(n + 1) - v) * u_cur - J.a_at(n) * u_prev) / J.a_at(n + 1);
    // Floquet coefficient of the propagated solution, from the weighted
    // Wronskian with the conjugate Floquet sequence.
    const std::complex<double> c_next = J.a_at(n + 1) *
                                        (u_cur * std::conj(phi_next) - u_next * std::conj(phi_cur)) /
                                        (-i_unit * omega);

    // Step-ratio identity: this is the normative definition of the discrete
    // Prufer pair, so its residual is checked at every step.
    const std::complex<double> z = i_unit * c_cur * phi_cur;
    const double zn = std::abs(z);
    if (!(zn > 0.0) || !std::isfinite(u_next))
      throw NumericError("stiff-integration", "discrete extraction broke down");
    const double sin_t = std::imag(z) / zn;
    const double cos_t = std::real(z) / zn;
    const double p2 = std::norm(phi_cur);
    const double lhs = std::norm(c_next) / std::norm(c_cur);
    const double rhs = 1.0 - v * (2.0 / omega) * (2.0 * sin_t * cos_t) * p2 +
                       (4.0 * v * v * p2 * p2 / (omega * omega)) * sin_t * sin_t;
    const double residual = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    if (residual > out.max_residual) out.max_residual = residual;
    if (residual > opts.residual_guard)
      throw NumericError("stiff-integration",
                         "discrete step identity residual " + std::to_string(residual) +
                             " at n = " + std::to_string(n));

    theta += std::arg(phi_next * std::conj(phi_cur)) + std::arg(c_next * std::conj(c_cur));

    u_prev = u_cur;
    u_cur = u_next;
    c_cur = c_next;
    phi_cur = phi_next;

    if ((n + 1) % opts.renorm_every == 0) {
      const int ex = std::ilogb(std::abs(c_cur));
      if (std::abs(ex) >= 8 && ex != FP_ILOGB0) {
        const double scale = std::ldexp(1.0, -ex);
        c_cur *= scale;
        u_prev *= scale;
        u_cur *= scale;
        ln_offset += static_cast<double>(ex) * M_LN2;
      }
    }

    record(n + 1, ln_offset + std::log(2.0 * std::abs(c_cur)));
  }

  traj.fit = ols.solve();
  traj.theta_end = theta;
  traj.x_end = static_cast<double>(n_max);
  return out;
}

}  // namespace bandprufer
