#pragma once

// Leapfrog evolution of the reduced field chi = r*phi for the forward
// equation and its conformally transformed counterpart, the closed-form
// d'Alembert oracle for the free equation, and convergence-order reports.
//
// Both evolutions share one kernel:
//   chi_tt - chi_rr = -coeff(t, r) |chi|^{p-1} chi / r^{p-1},
// with coeff identically 1 for the forward problem and coeff = c from the
// conformal chart for the transformed one. The nonlinear term is evaluated
// at the current level; axis and outer boundary hold chi = 0 exactly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "confwave/conformal.hpp"
#include "confwave/diagnostics.hpp"
#include "confwave/errors.hpp"
#include "confwave/grid.hpp"

namespace confwave {

struct EvolveOptions {
  int store_every = 1;   // time stride of the stored field
  int energy_every = 0;  // 0 = no energy recording
  std::vector<double> probe_radii;
  int probe_every = 1;
  int bound_every = 0;   // decay-bound monitor sampling (forward runs)
  bool nonlinearity = true;
  double blowup_threshold = 1e12;
};

struct ProbeSeries {
  double r = 0.0;
  std::vector<double> times;
  std::vector<double> values;
};

struct EvolutionReport {
  SpacetimeField field;
  long steps = 0;
  double max_abs_phi = 0.0;
  double cfl_used = 0.0;
  long long nonlinearity_evaluations = 0;
  std::vector<EnergyRecord> energy_series;
  std::vector<ProbeSeries> probes;
  BoundSeries bound;
};

// Fills `out` with the nonlinearity coefficient along the level at time t.
using CoefficientFiller =
    std::function<void(double t, const GridSpec&, std::vector<double>&)>;

inline CoefficientFiller unit_coefficient() {
  return [](double, const GridSpec& spec, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(spec.radial_nodes()), 1.0);
  };
}

inline CoefficientFiller chart_coefficient(const ConformalChart& chart) {
  return [chart](double t, const GridSpec& spec, std::vector<double>& out) {
    const long nr = spec.radial_nodes();
    out.resize(static_cast<std::size_t>(nr));
    for (long j = 0; j < nr; ++j) {
      const double r = spec.radius(j);
      out[j] = conformal_coefficient_extended(chart, t + r, t - r);
    }
  };
}

namespace detail {

// |x|^{p-1} x with fast paths for the integer powers used throughout.
enum class NlKind { cube, quartic, generic };

inline NlKind nl_kind(double p) {
  if (p == 3.0) return NlKind::cube;
  if (p == 4.0) return NlKind::quartic;
  return NlKind::generic;
}

struct LevelScratch {
  std::vector<double> prev, cur, next, coeff, inv_r, inv_rp;
};

inline double row_phi_at(std::span<const double> chi, double h, double r,
                         long nr) {
  if (r < 2.0 * h) {
    const auto fit = make_axis_fit(chi[1], chi[2], chi[3], h);
    return fit.phi(r);
  }
  const auto st = make_stencil(r / h, nr, h);
  double v = 0.0;
  for (int k = 0; k < st.count; ++k) v += st.w[k] * chi[st.base + k];
  return v / r;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Core evolution from a (phi, phi_t) slice at spec.t_start.
// ---------------------------------------------------------------------------

inline EvolutionReport evolve_from_slice(const TimeSlice& slice,
                                         const GridSpec& spec, double p,
                                         const EvolveOptions& options,
                                         const CoefficientFiller& coeff_fill,
                                         FieldKind kind) {
  spec.validate();
  slice.validate();
  if (!(p > 2.0) || !(p < 5.0))
    throw ConfigurationError("p", "power must lie in (2, 5)");
  const long nr = spec.radial_nodes();
  if (nr < 5)
    throw ConfigurationError("r_max", "grid needs at least 5 radial nodes");
  if (static_cast<long>(slice.r_nodes.size()) != nr ||
      std::abs(slice.spacing() - spec.h) > 1e-12 * spec.h)
    throw ConfigurationError("slice",
                             "initial slice must be sampled on the grid nodes");
  if (std::abs(slice.t - spec.t_start) > 1e-12)
    throw ConfigurationError("t_start",
                             "initial slice time must equal spec.t_start");
  if (options.store_every < 1)
    throw ConfigurationError("store_every", "must be >= 1");

  const long steps = spec.steps();
  const double h = spec.h;
  const double dt = spec.dt();
  const double lam2 = spec.lambda * spec.lambda;
  const double dt2 = dt * dt;

  EvolutionReport rep{SpacetimeField(spec, p, kind, options.store_every),
                      steps,
                      0.0,
                      spec.lambda,
                      0,
                      {},
                      {},
                      {}};
  for (double r : options.probe_radii) {
    if (!(r >= 0.0) || !(r < spec.r_max))
      throw ConfigurationError("probes", "probe radius outside the grid");
    rep.probes.push_back({r, {}, {}});
  }

  detail::LevelScratch s;
  s.prev.assign(nr, 0.0);
  s.cur.assign(nr, 0.0);
  s.next.assign(nr, 0.0);
  s.inv_r.assign(nr, 0.0);
  s.inv_rp.assign(nr, 0.0);
  for (long j = 1; j < nr; ++j) {
    const double r = spec.radius(j);
    s.inv_r[j] = 1.0 / r;
    s.inv_rp[j] = std::pow(r, -(p - 1.0));
  }

  std::vector<double> vel(nr, 0.0);
  long support_last = 0;
  for (long j = 0; j < nr; ++j) {
    const double r = slice.r_nodes[j];
    s.cur[j] = r * slice.phi[j];
    vel[j] = r * slice.phi_t[j];
    if (s.cur[j] != 0.0 || vel[j] != 0.0) support_last = j;
  }
  s.cur[0] = 0.0;
  vel[0] = 0.0;
  s.cur[nr - 1] = 0.0;
  vel[nr - 1] = 0.0;
  long front = std::min<long>(nr - 2, support_last + 1);

  const detail::NlKind nlk = detail::nl_kind(p);
  const bool with_nl = options.nonlinearity;
  auto nl_of = [nlk](double x) {
    switch (nlk) {
      case detail::NlKind::cube: return x * x * x;
      case detail::NlKind::quartic: return x * x * std::abs(x) * x;
      default: break;
    }
    return 0.0; // generic handled separately
  };

  // One level update; the nonlinear term uses the current level.
  auto step_row = [&](const std::vector<double>& prev,
                      const std::vector<double>& cur, std::vector<double>& next,
                      const std::vector<double>& coeff, long upto) {
    double levelmax = 0.0;
    if (with_nl && nlk != detail::NlKind::generic) {
      for (long j = 1; j <= upto; ++j) {
        const double c = cur[j];
        const double lap = cur[j + 1] - 2.0 * c + cur[j - 1];
        const double nl = -coeff[j] * nl_of(c) * s.inv_rp[j];
        const double val = 2.0 * c - prev[j] + lam2 * lap + dt2 * nl;
        next[j] = val;
        const double a = std::abs(val);
        if (a > levelmax) levelmax = a;
      }
      rep.nonlinearity_evaluations += upto;
    } else if (with_nl) {
      for (long j = 1; j <= upto; ++j) {
        const double c = cur[j];
        const double lap = cur[j + 1] - 2.0 * c + cur[j - 1];
        const double nl = -coeff[j] * std::pow(std::abs(c), p - 1.0) * c *
                          s.inv_rp[j];
        const double val = 2.0 * c - prev[j] + lam2 * lap + dt2 * nl;
        next[j] = val;
        const double a = std::abs(val);
        if (a > levelmax) levelmax = a;
      }
      rep.nonlinearity_evaluations += upto;
    } else {
      for (long j = 1; j <= upto; ++j) {
        const double c = cur[j];
        const double lap = cur[j + 1] - 2.0 * c + cur[j - 1];
        const double val = 2.0 * c - prev[j] + lam2 * lap;
        next[j] = val;
        const double a = std::abs(val);
        if (a > levelmax) levelmax = a;
      }
    }
    next[0] = 0.0;
    return levelmax;
  };

  auto check_level = [&](const std::vector<double>& row, double levelmax,
                         double t) {
    if (!(levelmax <= options.blowup_threshold)) {
      for (long j = 0; j < nr; ++j) {
        if (!std::isfinite(row[j]) || std::abs(row[j]) > options.blowup_threshold) {
          std::ostringstream os;
          os.precision(17);
          os << "evolution blew up at " << detail::fmt_point(t, spec.radius(j))
             << " with chi = " << row[j]
             << " (defocusing runs should never trip this; check resolution)";
          throw BlowUpError(os.str(), t, spec.radius(j), row[j]);
        }
      }
    }
  };

  auto track_phi_max = [&](const std::vector<double>& row, long upto) {
    double m = std::abs(detail::axis_derivative(row[1], row[2], row[3], h));
    for (long j = 1; j <= upto; ++j) {
      const double a = std::abs(row[j]) * s.inv_r[j];
      if (a > m) m = a;
    }
    if (m > rep.max_abs_phi) rep.max_abs_phi = m;
  };

  auto record_probes = [&](const std::vector<double>& row, double t) {
    for (auto& ps : rep.probes) {
      ps.times.push_back(t);
      ps.values.push_back(detail::row_phi_at(row, h, ps.r, nr));
    }
  };

  auto record_bound = [&](const std::vector<double>& row, double t, long upto) {
    double b = 0.0;
    const double axis_phi =
        std::abs(detail::axis_derivative(row[1], row[2], row[3], h));
    b = axis_phi * (1.0 + t) * std::pow(1.0 + t, p - 2.0);
    for (long j = 1; j <= upto; ++j) {
      const double r = spec.radius(j);
      if (r > t) break;
      const double w = (1.0 + t + r) * std::pow(1.0 + t - r, p - 2.0);
      const double a = std::abs(row[j]) * s.inv_r[j] * w;
      if (a > b) b = a;
    }
    rep.bound.times.push_back(t);
    rep.bound.values.push_back(b);
    const double prev_max =
        rep.bound.running_max.empty() ? 0.0 : rep.bound.running_max.back();
    rep.bound.running_max.push_back(std::max(prev_max, b));
  };

  auto record_energy = [&](const TimeSlice& sl, const std::vector<double>& coeff) {
    rep.energy_series.push_back(energy_from_slice(sl, p, coeff.data()));
  };

  // Builds the (phi, phi_t) slice at the level held in `cur`, with chi_t
  // supplied by the caller (exact at level 0, centered inside the run).
  auto make_slice = [&](const std::vector<double>& chi,
                        const std::vector<double>& chit, double t) {
    TimeSlice sl;
    sl.t = t;
    sl.r_nodes.resize(nr);
    sl.phi.resize(nr);
    sl.phi_t.resize(nr);
    for (long j = 0; j < nr; ++j) {
      const double r = spec.radius(j);
      sl.r_nodes[j] = r;
      if (j == 0) {
        sl.phi[j] = detail::axis_derivative(chi[1], chi[2], chi[3], h);
        sl.phi_t[j] = detail::axis_derivative(chit[1], chit[2], chit[3], h);
      } else {
        sl.phi[j] = chi[j] * s.inv_r[j];
        sl.phi_t[j] = chit[j] * s.inv_r[j];
      }
    }
    return sl;
  };

  auto store_level = [&](long level, const std::vector<double>& row) {
    if (level % options.store_every != 0) return;
    const long sl = level / options.store_every;
    if (sl >= rep.field.stored_levels()) return;
    auto dst = rep.field.row(sl);
    std::copy(row.begin(), row.end(), dst.begin());
  };

  s.coeff.assign(nr, 1.0);
  auto fill_coeff = [&](double t) {
    if (coeff_fill) coeff_fill(t, spec, s.coeff);
  };

  // Level 0: store, record from the exact initial data.
  fill_coeff(spec.time(0));
  store_level(0, s.cur);
  track_phi_max(s.cur, front);
  if (options.energy_every > 0)
    record_energy(make_slice(s.cur, vel, spec.time(0)), s.coeff);
  if (!rep.probes.empty()) record_probes(s.cur, spec.time(0));
  if (options.bound_every > 0 && kind == FieldKind::forward)
    record_bound(s.cur, spec.time(0), front);

  if (steps == 0) return rep;

  // Level 1 from the second-order Taylor start.
  {
    double levelmax = 0.0;
    for (long j = 1; j <= front; ++j) {
      const double c = s.cur[j];
      const double lap = s.cur[j + 1] - 2.0 * c + s.cur[j - 1];
      double nl = 0.0;
      if (with_nl) {
        nl = (nlk == detail::NlKind::generic)
                 ? -s.coeff[j] * std::pow(std::abs(c), p - 1.0) * c * s.inv_rp[j]
                 : -s.coeff[j] * nl_of(c) * s.inv_rp[j];
        ++rep.nonlinearity_evaluations;
      }
      const double val = c + dt * vel[j] + 0.5 * (lam2 * lap + dt2 * nl);
      s.next[j] = val;
      levelmax = std::max(levelmax, std::abs(val));
    }
    s.next[0] = 0.0;
    front = std::min<long>(nr - 2, front + 1);
    check_level(s.next, levelmax, spec.time(1));
    store_level(1, s.next);
    std::swap(s.prev, s.cur);
    std::swap(s.cur, s.next);
    std::fill(s.next.begin(), s.next.end(), 0.0);
  }

  std::vector<double> chit(nr, 0.0);
  const double inv_2dt = 1.0 / (2.0 * dt);

  for (long n = 1; n < steps; ++n) {
    fill_coeff(spec.time(n));
    const double levelmax = step_row(s.prev, s.cur, s.next, s.coeff, front);
    check_level(s.next, levelmax, spec.time(n + 1));

    const double t_n = spec.time(n);
    track_phi_max(s.cur, front);
    if (options.energy_every > 0 && n % options.energy_every == 0) {
      for (long j = 0; j < nr; ++j) chit[j] = (s.next[j] - s.prev[j]) * inv_2dt;
      record_energy(make_slice(s.cur, chit, t_n), s.coeff);
    }
    if (!rep.probes.empty() && n % options.probe_every == 0)
      record_probes(s.cur, t_n);
    if (options.bound_every > 0 && kind == FieldKind::forward &&
        n % options.bound_every == 0)
      record_bound(s.cur, t_n, front);

    store_level(n + 1, s.next);
    front = std::min<long>(nr - 2, front + 1);
    std::swap(s.prev, s.cur);
    std::swap(s.cur, s.next);
  }

  // Final level: amplitude tracking plus probe/bound samples (no centered
  // time derivative is available, so no energy record here).
  track_phi_max(s.cur, front);
  if (!rep.probes.empty() && steps % options.probe_every == 0)
    record_probes(s.cur, spec.time(steps));
  if (options.bound_every > 0 && kind == FieldKind::forward &&
      steps % options.bound_every == 0)
    record_bound(s.cur, spec.time(steps), front);

  return rep;
}

// ---------------------------------------------------------------------------
// Forward problem: data at t = 1, coefficient identically one.
// ---------------------------------------------------------------------------

inline EvolutionReport evolve_forward(const InitialDataSpec& data,
                                      const GridSpec& spec, double p,
                                      const EvolveOptions& options = {}) {
  spec.validate();
  if (!(p > 2.0) || !(p < 5.0))
    throw ConfigurationError("p", "power must lie in (2, 5)");
  const double horizon = spec.t_end - spec.t_start;
  if (spec.r_max < data.support_radius + horizon - 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "outer boundary is causally reachable: need r_max >= "
       << data.support_radius + horizon << ", got " << spec.r_max;
    throw ConfigurationError("r_max", os.str());
  }
  const TimeSlice slice = sample_initial_data(data, spec, p);
  return evolve_from_slice(slice, spec, p, options, unit_coefficient(),
                           FieldKind::forward);
}

// ---------------------------------------------------------------------------
// Transformed problem on K = K- cut to [-1, t_end < 0): data on J at t = -1,
// coefficient from the chart (diagonal-regularized, clamped at the cone).
// ---------------------------------------------------------------------------

inline EvolutionReport evolve_transformed(const TimeSlice& slice,
                                          const GridSpec& spec, double p,
                                          const ConformalChart& chart,
                                          const EvolveOptions& options = {}) {
  spec.validate();
  chart.validate();
  if (!(p >= 3.0) || !(p < 5.0))
    throw ConfigurationError("p", "transformed evolution requires 3 <= p < 5");
  if (!(spec.t_end < 0.0))
    throw DomainError("transformed evolution requires t_end < 0 (region K)");
  if (std::abs(spec.t_start + 1.0) > 1e-12)
    throw ConfigurationError("t_start", "transformed data is given at t = -1");
  if (std::abs(chart.p - p) > 1e-12)
    throw ConfigurationError("p", "chart power must match the evolution power");
  double support_outer = 0.0;
  for (std::size_t j = 0; j < slice.r_nodes.size(); ++j)
    if (slice.phi[j] != 0.0 || slice.phi_t[j] != 0.0)
      support_outer = slice.r_nodes[j];
  if (!(support_outer < 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "transformed data must be supported inside [0, 1): found support at r = "
       << support_outer;
    throw SupportViolationError(os.str());
  }
  const double horizon = spec.t_end - spec.t_start;
  if (spec.r_max < support_outer + horizon - 1e-12)
    throw ConfigurationError(
        "r_max", "outer boundary is causally reachable from the data support");
  return evolve_from_slice(slice, spec, p, options, chart_coefficient(chart),
                           FieldKind::transformed);
}

// ---------------------------------------------------------------------------
// Closed-form spherical d'Alembert solution for the free equation with bump
// data: with odd extensions g^, k^ of g = r phi0 and k = r phi1,
//   chi(t, r) = [g^(r+tau) + g^(r-tau)]/2 + [K(r+tau) - K(r-tau)]/2,
// where K is the (even) primitive of k^ and tau = t - 1.
// ---------------------------------------------------------------------------

namespace detail {

inline double odd_g(const InitialDataSpec& d, double x) {
  return x * bump_profile(std::abs(x), d.amplitude, d.support_radius,
                          d.smoothness_exponent);
}

inline double even_K(const InitialDataSpec& d, double x) {
  const double rho = d.support_radius;
  const double m1 = static_cast<double>(d.smoothness_exponent) + 1.0;
  const double cap = d.velocity_amplitude * rho * rho / (2.0 * m1);
  const double a = std::abs(x);
  if (a >= rho) return cap;
  const double w = 1.0 - (a / rho) * (a / rho);
  return cap * (1.0 - std::pow(w, m1));
}

} // namespace detail

inline double exact_linear_solution(const InitialDataSpec& data, double t,
                                    double r) {
  data.validate_shape();
  if (!(t >= 1.0)) throw DomainError("exact linear solution requires t >= 1");
  if (r < 0.0) throw DomainError("radius must be >= 0");
  const double tau = t - 1.0;
  if (r < 1e-6) {
    // axis limit: phi(t, 0) = g^'(tau) + k^(tau)
    const double gp = bump_profile(tau, data.amplitude, data.support_radius,
                                   data.smoothness_exponent) +
                      tau * bump_profile_derivative(tau, data.amplitude,
                                                    data.support_radius,
                                                    data.smoothness_exponent);
    const double k = tau * bump_profile(tau, data.velocity_amplitude,
                                        data.support_radius,
                                        data.smoothness_exponent);
    return gp + k;
  }
  const double chi = 0.5 * (detail::odd_g(data, r + tau) +
                            detail::odd_g(data, r - tau)) +
                     0.5 * (detail::even_K(data, r + tau) -
                            detail::even_K(data, r - tau));
  return chi / r;
}

// ---------------------------------------------------------------------------
// Convergence order from errors at h, h/2, h/4, ...
// ---------------------------------------------------------------------------

struct ConvergenceReport {
  std::vector<double> orders; // log2 of successive error ratios
  bool monotone = true;       // errors strictly decreasing
  double mean_order = 0.0;
};

inline ConvergenceReport convergence_order(const std::vector<double>& errors) {
  if (errors.size() < 2)
    throw DegenerateInputError("convergence order needs at least two errors");
  for (std::size_t i = 0; i + 1 < errors.size(); ++i)
    if (errors[i] == errors[i + 1])
      throw DegenerateInputError(
          "identical errors between refinements (identical runs?)");
  for (double e : errors)
    if (!(e > 0.0) || !std::isfinite(e))
      throw DegenerateInputError("errors must be positive and finite");
  ConvergenceReport rep;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double o = std::log2(errors[i] / errors[i + 1]);
    rep.orders.push_back(o);
    if (!(errors[i + 1] < errors[i])) rep.monotone = false;
    sum += o;
  }
  rep.mean_order = sum / static_cast<double>(rep.orders.size());
  return rep;
}

// ---------------------------------------------------------------------------
// Initial data on J at t = -1 by push-forward of a forward run. The time
// derivative uses a one-sided O(delta^2) stencil into the strip (preimages
// of t < -1 near the axis would fall before t = 1).
// ---------------------------------------------------------------------------

inline TimeSlice build_transformed_initial_slice(const SpacetimeField& forward,
                                                 const ConformalChart& chart,
                                                 double support_radius,
                                                 const GridSpec& strip,
                                                 double delta = 0.0) {
  chart.validate();
  strip.validate();
  if (forward.kind() != FieldKind::forward)
    throw DomainError("expected a forward-cone source field");
  if (std::abs(strip.t_start + 1.0) > 1e-12)
    throw ConfigurationError("t_start", "strip data is built at t = -1");
  if (delta <= 0.0) delta = forward.spec().h;
  const double q = chart.p - 2.0;
  const double r_outer = std::pow(1.0 - support_radius, -q) - 1.0; // J edge
  const long nr = strip.radial_nodes();

  TimeSlice slice;
  slice.t = -1.0;
  slice.r_nodes.resize(nr);
  slice.phi.resize(nr, 0.0);
  slice.phi_t.resize(nr, 0.0);

  auto psi_at = [&](double tt, double rr) {
    const UV pre = map_inverse(chart, tt + rr, tt - rr);
    const double t = coord_t(pre), r = coord_r(pre);
    if (!detail::preimage_inside(forward, t, r)) {
      std::ostringstream os;
      os.precision(17);
      os << "forward run horizon too short: J-slice corner (t~=" << tt
         << ", r~=" << rr << ") needs (t=" << t << ", r=" << r << ")";
      throw CoverageError(os.str(), tt, rr);
    }
    return interpolate(forward, t, r) / omega(chart, pre.u, pre.v);
  };

  for (long j = 0; j < nr; ++j) {
    const double rr = strip.radius(j);
    slice.r_nodes[j] = rr;
    if (rr > r_outer) continue; // outside J: data vanish identically
    const double p0 = psi_at(-1.0, rr);
    const double p1 = psi_at(-1.0 + delta, rr);
    const double p2 = psi_at(-1.0 + 2.0 * delta, rr);
    slice.phi[j] = p0;
    slice.phi_t[j] = (-3.0 * p0 + 4.0 * p1 - p2) / (2.0 * delta);
  }
  return slice;
}

} // namespace confwave
