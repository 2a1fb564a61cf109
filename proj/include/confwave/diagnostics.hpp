#pragma once

// Energy functionals, the pseudo-energy and light-cone flux of the
// transformed problem, the divergence-identity residual, decay/boundedness
// monitors and power-law tail fits.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "confwave/conformal.hpp"
#include "confwave/errors.hpp"
#include "confwave/grid.hpp"

namespace confwave {

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct EnergyRecord {
  double t = 0.0;
  double kinetic = 0.0;
  double gradient = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

struct FluxRecord {
  double t0 = 0.0;
  double flux = 0.0;
  double e0 = 0.0;
  double ratio = 0.0;
  double potential_part = 0.0;
};

struct DecayFit {
  double r_probe = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double exponent = 0.0;
  double amplitude = 0.0;
  double rms_residual = 0.0;
  bool oscillation_flagged = false;
  long points = 0;
};

struct BoundSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> running_max;
};

struct SupSeries {
  std::vector<double> times;
  std::vector<double> sup;
  double overall = 0.0;
};

// One named time series, exportable as CSV (t, value, kind).
struct DiagnosticsSeries {
  std::string kind;
  std::vector<double> t;
  std::vector<double> value;
};

// ---------------------------------------------------------------------------
// Quadrature: composite Simpson on uniform nodes; an odd interval count is
// finished with the 3/8 rule so the order is preserved.
// ---------------------------------------------------------------------------

inline double simpson_uniform(const std::vector<double>& f, double h) {
  const long n = static_cast<long>(f.size());
  if (n < 3) throw DegenerateInputError("quadrature needs at least 3 nodes");
  const long intervals = n - 1;
  double sum = 0.0;
  long even_end = intervals; // index past the Simpson block
  if (intervals % 2 != 0) even_end = intervals - 3;
  for (long i = 0; i + 2 <= even_end; i += 2)
    sum += (h / 3.0) * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (intervals % 2 != 0) {
    const long i = even_end;
    sum += (3.0 * h / 8.0) *
           (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  return sum;
}

namespace detail {

inline double abs_pow_p1(double x, double p) {
  // |x|^{p+1} with fast paths for p = 3, 4
  if (p == 3.0) {
    const double x2 = x * x;
    return x2 * x2;
  }
  if (p == 4.0) {
    const double x2 = x * x;
    return x2 * x2 * std::abs(x);
  }
  return std::pow(std::abs(x), p + 1.0);
}

inline double abs_pow_pm1_x(double x, double p) {
  // |x|^{p-1} x with fast paths for p = 3, 4
  if (p == 3.0) return x * x * x;
  if (p == 4.0) return x * x * std::abs(x) * x;
  return std::pow(std::abs(x), p - 1.0) * x;
}

} // namespace detail

// Radial energy integrand of the (pseudo-)energy with an optional weight on
// the potential term: int r^2 [ phi_t^2/2 + phi_r^2/2 + w |phi|^{p+1}/(p+1) ].
inline EnergyRecord energy_from_slice(const TimeSlice& slice, double p,
                                      const double* weight = nullptr) {
  slice.validate();
  const long n = static_cast<long>(slice.r_nodes.size());
  const double h = slice.spacing();
  std::vector<double> kin(n), grad(n), pot(n);
  for (long j = 0; j < n; ++j) {
    const double r = slice.r_nodes[j];
    const double r2 = r * r;
    double phi_r;
    if (j == 0)
      phi_r = 0.0; // regular radial fields are even in r
    else if (j == n - 1)
      phi_r = (3.0 * slice.phi[j] - 4.0 * slice.phi[j - 1] +
               slice.phi[j - 2]) /
              (2.0 * h);
    else
      phi_r = (slice.phi[j + 1] - slice.phi[j - 1]) / (2.0 * h);
    const double w = weight ? weight[j] : 1.0;
    kin[j] = 0.5 * slice.phi_t[j] * slice.phi_t[j] * r2;
    grad[j] = 0.5 * phi_r * phi_r * r2;
    pot[j] = w * detail::abs_pow_p1(slice.phi[j], p) / (p + 1.0) * r2;
  }
  EnergyRecord rec;
  rec.t = slice.t;
  rec.kinetic = simpson_uniform(kin, h);
  rec.gradient = simpson_uniform(grad, h);
  rec.potential = simpson_uniform(pot, h);
  rec.total = rec.kinetic + rec.gradient + rec.potential;
  return rec;
}

inline EnergyRecord conserved_energy(const TimeSlice& slice, double p) {
  return energy_from_slice(slice, p, nullptr);
}

inline EnergyRecord pseudo_energy(const TimeSlice& slice,
                                  const ConformalChart& chart, double p) {
  if (!(slice.t >= -1.0) || !(slice.t < 0.0))
    throw DomainError("pseudo-energy slice must sit at t in [-1, 0)");
  const long n = static_cast<long>(slice.r_nodes.size());
  std::vector<double> w(n);
  for (long j = 0; j < n; ++j) {
    const double r = slice.r_nodes[j];
    w[j] = conformal_coefficient_extended(chart, slice.t + r, slice.t - r);
  }
  return energy_from_slice(slice, p, w.data());
}

// ---------------------------------------------------------------------------
// Light-cone flux along s -> (s, t0 - s):
//   Flux(-1, t0) = int (t0-s)^2 [ (psi_t - psi_r)^2/2 + c|psi|^{p+1}/(p+1) ]
// by trapezoid with interpolated derivatives; the pure potential part (the
// quantity bounded by E0) is returned alongside.
// ---------------------------------------------------------------------------

inline FluxRecord lightcone_flux(const SpacetimeField& field,
                                 const ConformalChart& chart, double t0,
                                 double p) {
  if (field.kind() != FieldKind::transformed)
    throw DomainError("light-cone flux expects a transformed-run field");
  if (!(t0 > -1.0) || !(t0 < 0.0))
    throw DomainError("flux endpoint t0 must lie in (-1, 0)");
  if (std::abs(field.spec().t_start + 1.0) > 1e-12)
    throw DomainError("flux integral starts on the slice t = -1");
  if (t0 > field.last_time() + 1e-12)
    throw DomainError("flux endpoint beyond the evolved horizon");
  if (t0 + 1.0 > field.spec().r_max)
    throw DomainError("null segment leaves the grid radially");

  const double ds = field.stored_dt();
  const long m = std::max<long>(2, static_cast<long>(std::ceil((t0 + 1.0) / ds)));
  const double step = (t0 + 1.0) / static_cast<double>(m);
  double flux = 0.0, pot = 0.0;
  for (long k = 0; k <= m; ++k) {
    const double s = -1.0 + static_cast<double>(k) * step;
    const double r = t0 - s;
    const PhiSample ps = sample_phi(field, s, r, /*want_derivs=*/true);
    const double c = conformal_coefficient(chart, t0, s - r);
    const double r2 = r * r;
    const double ingoing = ps.phi_t - ps.phi_r;
    const double pot_term = r2 * c * detail::abs_pow_p1(ps.phi, p) / (p + 1.0);
    const double w = (k == 0 || k == m) ? 0.5 : 1.0;
    flux += w * (r2 * 0.5 * ingoing * ingoing + pot_term);
    pot += w * pot_term;
  }
  FluxRecord rec;
  rec.t0 = t0;
  rec.flux = flux * step;
  rec.potential_part = pot * step;
  rec.e0 = pseudo_energy(slice_at(field, 0), chart, p).total;
  rec.ratio = rec.e0 > 0.0 ? rec.flux / rec.e0 : 0.0;
  return rec;
}

// ---------------------------------------------------------------------------
// Divergence identity residual: both sides of
//   Div E = (1/(p+1)) r^2 (d_t c) |psi|^{p+1}
// with centered differences for the field side and the analytic d_t c on the
// right; the max-norm over causally valid interior points is returned.
// ---------------------------------------------------------------------------

struct DivergenceResidual {
  double max_residual = 0.0;
  double max_lhs = 0.0;
  long samples = 0;
};

// Default causal mask: strictly inside K with a margin covering the
// numerical domain of influence (1 cell per step) plus a stencil buffer.
inline std::function<bool(double, double)> default_strip_mask(
    const GridSpec& spec) {
  const double lam = spec.lambda;
  const double h = spec.h;
  const double t_start = spec.t_start;
  return [lam, h, t_start](double t, double r) {
    const double margin = (1.0 / lam - 1.0) * (t - t_start) + 6.0 * h;
    return r >= 2.0 * h && r <= -t - margin;
  };
}

inline DivergenceResidual divergence_identity_residual(
    const SpacetimeField& field, const ConformalChart& chart, double p,
    const std::function<bool(double, double)>& mask = nullptr) {
  if (field.kind() != FieldKind::transformed)
    throw DomainError("divergence identity expects a transformed-run field");
  const long nt = field.stored_levels();
  const long nr = field.radial_nodes();
  if (nt < 7 || nr < 7)
    throw DegenerateInputError("field too small for the divergence residual");
  const double h = field.spec().h;
  const double dt = field.stored_dt();
  const auto in_mask = mask ? mask : default_strip_mask(field.spec());

  // psi on the whole lattice (axis recovered), then psi_t, psi_r.
  auto idx = [nr](long n, long j) { return static_cast<std::size_t>(n) * nr + j; };
  std::vector<double> psi(static_cast<std::size_t>(nt) * nr, 0.0);
  for (long n = 0; n < nt; ++n) {
    const auto row = field.row(n);
    psi[idx(n, 0)] = detail::axis_derivative(row[1], row[2], row[3], h);
    for (long j = 1; j < nr; ++j) psi[idx(n, j)] = row[j] / field.radius(j);
  }
  std::vector<double> psi_t(psi.size(), 0.0), psi_r(psi.size(), 0.0);
  for (long n = 1; n + 1 < nt; ++n)
    for (long j = 0; j < nr; ++j)
      psi_t[idx(n, j)] = (psi[idx(n + 1, j)] - psi[idx(n - 1, j)]) / (2.0 * dt);
  for (long n = 0; n < nt; ++n)
    for (long j = 1; j + 1 < nr; ++j)
      psi_r[idx(n, j)] = (psi[idx(n, j + 1)] - psi[idx(n, j - 1)]) / (2.0 * h);

  // energy-current components E^t, E^r
  std::vector<double> Et(psi.size(), 0.0), Er(psi.size(), 0.0);
  for (long n = 1; n + 1 < nt; ++n) {
    const double t = field.time_of(n);
    for (long j = 1; j + 1 < nr; ++j) {
      const double r = field.radius(j);
      const double r2 = r * r;
      const double c = conformal_coefficient_extended(chart, t + r, t - r);
      const double k = psi_t[idx(n, j)], g = psi_r[idx(n, j)];
      Et[idx(n, j)] = r2 * (0.5 * k * k + 0.5 * g * g +
                            c * detail::abs_pow_p1(psi[idx(n, j)], p) / (p + 1.0));
      Er[idx(n, j)] = -r2 * k * g;
    }
  }

  DivergenceResidual out;
  for (long n = 2; n + 2 < nt; ++n) {
    const double t = field.time_of(n);
    for (long j = 2; j + 2 < nr; ++j) {
      const double r = field.radius(j);
      if (!in_mask(t, r)) continue;
      const double div = (Et[idx(n + 1, j)] - Et[idx(n - 1, j)]) / (2.0 * dt) +
                         (Er[idx(n, j + 1)] - Er[idx(n, j - 1)]) / (2.0 * h);
      const double dtc = conformal_coefficient_dt(chart, t + r, t - r);
      const double rhs =
          r * r * dtc * detail::abs_pow_p1(psi[idx(n, j)], p) / (p + 1.0);
      const double res = std::abs(div - rhs);
      out.max_residual = std::max(out.max_residual, res);
      out.max_lhs = std::max(out.max_lhs, std::abs(div));
      ++out.samples;
    }
  }
  if (out.samples == 0)
    throw DegenerateInputError("divergence residual mask selected no points");
  return out;
}

// ---------------------------------------------------------------------------
// Discrete equation residuals on stored lattices (used on pushed or
// manufactured fields; solver output satisfies them to roundoff).
// ---------------------------------------------------------------------------

inline double equation_residual_maxnorm(
    const SpacetimeField& field, double p,
    const std::function<double(double, double)>& coeff,
    const std::function<bool(double, double)>& mask = nullptr) {
  const long nt = field.stored_levels();
  const long nr = field.radial_nodes();
  if (nt < 3 || nr < 3)
    throw DegenerateInputError("field too small for an equation residual");
  const double h = field.spec().h;
  const double dt = field.stored_dt();
  double worst = 0.0;
  long samples = 0;
  for (long n = 1; n + 1 < nt; ++n) {
    const double t = field.time_of(n);
    for (long j = 1; j + 1 < nr; ++j) {
      const double r = field.radius(j);
      if (mask && !mask(t, r)) continue;
      const double x = field.chi(n, j);
      const double chi_tt =
          (field.chi(n + 1, j) - 2.0 * x + field.chi(n - 1, j)) / (dt * dt);
      const double chi_rr =
          (field.chi(n, j + 1) - 2.0 * x + field.chi(n, j - 1)) / (h * h);
      const double nl =
          coeff(t, r) * detail::abs_pow_pm1_x(x, p) * std::pow(r, -(p - 1.0));
      const double res = std::abs(chi_tt - chi_rr + nl);
      worst = std::max(worst, res);
      ++samples;
    }
  }
  if (samples == 0)
    throw DegenerateInputError("equation residual mask selected no points");
  return worst;
}

inline double forward_equation_residual(const SpacetimeField& field, double p) {
  return equation_residual_maxnorm(field, p,
                                   [](double, double) { return 1.0; });
}

inline double transformed_equation_residual(
    const SpacetimeField& field, const ConformalChart& chart, double p,
    const std::function<bool(double, double)>& mask = nullptr) {
  return equation_residual_maxnorm(
      field, p,
      [&chart](double t, double r) {
        return conformal_coefficient_extended(chart, t + r, t - r);
      },
      mask ? mask : default_strip_mask(field.spec()));
}

// ---------------------------------------------------------------------------
// Decay-bound monitor B(t) = sup_{r <= t} |phi| (1+t+r)(1+t-r)^{p-2}.
// ---------------------------------------------------------------------------

inline BoundSeries decay_bound_monitor(const SpacetimeField& field, double p) {
  if (field.kind() != FieldKind::forward)
    throw DomainError("decay-bound monitor expects a forward-run field");
  const long nt = field.stored_levels();
  const long nr = field.radial_nodes();
  if (nr < 4) throw DegenerateInputError("need at least 4 radial nodes");
  const double h = field.spec().h;
  BoundSeries out;
  out.times.reserve(nt);
  out.values.reserve(nt);
  out.running_max.reserve(nt);
  double runmax = 0.0;
  for (long n = 0; n < nt; ++n) {
    const double t = field.time_of(n);
    const auto row = field.row(n);
    double b = std::abs(detail::axis_derivative(row[1], row[2], row[3], h)) *
               (1.0 + t) * std::pow(1.0 + t, p - 2.0);
    for (long j = 1; j < nr; ++j) {
      const double r = field.radius(j);
      if (r > t) break;
      const double w = (1.0 + t + r) * std::pow(1.0 + t - r, p - 2.0);
      b = std::max(b, std::abs(row[j]) / r * w);
    }
    runmax = std::max(runmax, b);
    out.times.push_back(t);
    out.values.push_back(b);
    out.running_max.push_back(runmax);
  }
  return out;
}

// Window-maximum ratio (late versus early) used by the plateau tests.
inline double window_max_ratio(const std::vector<double>& times,
                               const std::vector<double>& values,
                               double early_lo, double split, double late_hi) {
  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t >= early_lo && t < split) early = std::max(early, values[i]);
    if (t >= split && t <= late_hi) late = std::max(late, values[i]);
  }
  if (early <= 0.0)
    throw DegenerateInputError("empty or zero early window in ratio test");
  return late / early;
}

// ---------------------------------------------------------------------------
// Uniform-boundedness report: sup_r |psi(t, .)| per stored level.
// ---------------------------------------------------------------------------

inline SupSeries uniform_bound_report(const SpacetimeField& field) {
  const long nt = field.stored_levels();
  const long nr = field.radial_nodes();
  if (nr < 4) throw DegenerateInputError("need at least 4 radial nodes");
  const double h = field.spec().h;
  SupSeries out;
  out.times.reserve(nt);
  out.sup.reserve(nt);
  for (long n = 0; n < nt; ++n) {
    const auto row = field.row(n);
    double m = std::abs(detail::axis_derivative(row[1], row[2], row[3], h));
    for (long j = 1; j < nr; ++j)
      m = std::max(m, std::abs(row[j]) / field.radius(j));
    out.times.push_back(field.time_of(n));
    out.sup.push_back(m);
    out.overall = std::max(out.overall, m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tail fit: least-squares line in log|phi| versus log t.
// ---------------------------------------------------------------------------

inline DecayFit tail_fit_from_series(const std::vector<double>& times,
                                     const std::vector<double>& values,
                                     double r_probe, double t_lo, double t_hi,
                                     double scale) {
  if (!(t_hi > t_lo) || !(t_lo >= 1.0))
    throw DomainError("fit window must satisfy t_hi > t_lo >= 1");
  std::vector<double> ts, vs;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t_lo && times[i] <= t_hi) {
      ts.push_back(times[i]);
      vs.push_back(values[i]);
    }
  if (ts.size() < 8)
    throw DegenerateInputError("fit window contains fewer than 8 samples");
  const double floor = 10.0 * DBL_EPSILON * scale;
  for (double v : vs)
    if (!(std::abs(v) > floor)) {
      std::ostringstream os;
      os.precision(3);
      os << "probe signal at or below the roundoff noise floor (" << floor
         << ")";
      throw NoiseFloorError(os.str());
    }

  DecayFit fit;
  fit.r_probe = r_probe;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;

  bool sign_change = false;
  for (std::size_t i = 1; i < vs.size(); ++i)
    if ((vs[i] > 0.0) != (vs[0] > 0.0)) {
      sign_change = true;
      break;
    }
  std::vector<double> xs, ys;
  if (!sign_change) {
    for (std::size_t i = 0; i < ts.size(); ++i) {
      xs.push_back(std::log(ts[i]));
      ys.push_back(std::log(std::abs(vs[i])));
    }
  } else {
    // oscillatory signal: fit the local maxima of |phi| instead
    fit.oscillation_flagged = true;
    for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
      const double a = std::abs(vs[i]);
      if (a >= std::abs(vs[i - 1]) && a >= std::abs(vs[i + 1]) && a > floor) {
        xs.push_back(std::log(ts[i]));
        ys.push_back(std::log(a));
      }
    }
    if (xs.size() < 4)
      throw DegenerateInputError("too few |phi| maxima for an oscillatory fit");
  }

  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw DegenerateInputError("degenerate fit abscissae");
  fit.exponent = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.amplitude = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + fit.exponent * xs[i]);
    rss += e * e;
  }
  fit.rms_residual = std::sqrt(rss / n);
  fit.points = static_cast<long>(xs.size());
  return fit;
}

inline DecayFit tail_exponent_fit(const SpacetimeField& field, double r_probe,
                                  double t_lo, double t_hi) {
  if (!(r_probe >= 0.0) || !(r_probe < field.spec().r_max))
    throw DomainError("probe radius outside the grid");
  if (t_lo < field.spec().t_start - 1e-12 || t_hi > field.last_time() + 1e-12)
    throw DomainError("fit window outside the evolved horizon");
  const long nt = field.stored_levels();
  std::vector<double> times(nt), values(nt);
  double scale = 0.0;
  for (long n = 0; n < nt; ++n) {
    times[n] = field.time_of(n);
    values[n] = interpolate(field, times[n], r_probe);
    scale = std::max(scale, std::abs(values[n]));
  }
  return tail_fit_from_series(times, values, r_probe, t_lo, t_hi, scale);
}

} // namespace confwave
