#pragma once

// Geometry of the nonlinearity-adapted conformal map between the forward and
// backward light cones: the map pair Phi / Phi^{-1} in double-null
// coordinates, the conformal factor Omega, the transformed-equation
// coefficient c, region predicates, the image curve H with its data
// interval J, and push/pull of solutions between the cones.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "confwave/errors.hpp"
#include "confwave/grid.hpp"

namespace confwave {

struct UV {
  double u = 0, v = 0;
};

inline UV null_coords(double t, double r) { return {t + r, t - r}; }
inline double coord_t(const UV& x) { return 0.5 * (x.u + x.v); }
inline double coord_r(const UV& x) { return 0.5 * (x.u - x.v); }

// ---------------------------------------------------------------------------
// ConformalChart
// ---------------------------------------------------------------------------

struct ConformalChart {
  double p = 3.0;
  // relative off-diagonal scale below which series evaluation replaces the
  // closed forms of Omega and c
  double diagonal_threshold = 1e-4;

  void validate() const {
    if (!(p > 2.0)) throw DomainError("conformal chart requires p > 2");
    if (!(diagonal_threshold > 0.0) || diagonal_threshold > 1e-2)
      throw ConfigurationError("diagonal_threshold",
                               "must lie in (0, 1e-2]");
  }
};

namespace detail {

// Orientation violations within a few ulp come from forming t +- r; they are
// snapped onto the diagonal rather than rejected.
inline bool snap_diagonal(double& u, double& v) {
  if (v <= u) return true;
  const double scale = std::max({std::abs(u), std::abs(v), 1.0});
  if (v - u <= 1e-12 * scale) {
    v = u;
    return true;
  }
  return false;
}

inline void require_kplus(double& u, double& v) {
  if (!(u > 0.0) || !(v > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "point (u=" << u << ", v=" << v << ") not in K+ (u, v must be > 0)";
    throw DomainError(os.str());
  }
  if (!snap_diagonal(u, v)) {
    std::ostringstream os;
    os.precision(17);
    os << "null coordinates out of order: v=" << v << " > u=" << u;
    throw OrientationError(os.str());
  }
}

inline void require_kminus(double& uu, double& vv) {
  if (!(uu < 0.0) || !(vv < 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "point (u=" << uu << ", v=" << vv
       << ") not in K- (both null coordinates must be < 0)";
    throw DomainError(os.str());
  }
  if (!snap_diagonal(uu, vv)) {
    std::ostringstream os;
    os.precision(17);
    os << "null coordinates out of order: v=" << vv << " > u=" << uu;
    throw OrientationError(os.str());
  }
}

} // namespace detail

// (u, v) in K+ -> (-u^{-(p-2)}, -v^{-(p-2)}) in K-.
inline UV map_forward(const ConformalChart& chart, double u, double v) {
  detail::require_kplus(u, v);
  const double q = chart.p - 2.0;
  return {-std::pow(u, -q), -std::pow(v, -q)};
}

// Analytic inverse ((-u)^{-1/(p-2)}, (-v)^{-1/(p-2)}).
inline UV map_inverse(const ConformalChart& chart, double uu, double vv) {
  detail::require_kminus(uu, vv);
  const double s = 1.0 / (chart.p - 2.0);
  return {std::pow(-uu, -s), std::pow(-vv, -s)};
}

// ---------------------------------------------------------------------------
// Omega: the positive factor with r * Omega = r o Phi.
// Closed form [v^{-q} - u^{-q}] / (u - v), evaluated via expm1/log1p off the
// diagonal and by its Taylor series in delta = (u - v)/u below the threshold;
// the diagonal limit is (p-2)/t^{p-1}.
// ---------------------------------------------------------------------------

inline double omega(const ConformalChart& chart, double u, double v) {
  detail::require_kplus(u, v);
  const double q = chart.p - 2.0;
  const double delta = (u - v) / u;
  const double scale = std::pow(u, -(chart.p - 1.0));
  if (delta < chart.diagonal_threshold) {
    const double b1 = (q + 1.0) / 2.0;
    const double b2 = (q + 1.0) * (q + 2.0) / 6.0;
    const double b3 = (q + 1.0) * (q + 2.0) * (q + 3.0) / 24.0;
    return scale * q * (1.0 + delta * (b1 + delta * (b2 + delta * b3)));
  }
  return scale * std::expm1(-q * std::log1p(-delta)) / delta;
}

// ---------------------------------------------------------------------------
// c: coefficient of the transformed nonlinearity on K-,
//   c = (1/(p-2)^2) [ (u-v) / ((-v)^{1/(p-2)} - (-u)^{1/(p-2)}) ]^{p-1}
// in the K- coordinates. p = 3 gives exactly 1 on every branch.
// ---------------------------------------------------------------------------

namespace detail {

// G = (u-v)/((-v)^s - (-u)^s) on K-, with w = -u <= W = -v.
inline double coeff_base(double p, double threshold, double w, double W) {
  const double s = 1.0 / (p - 2.0);
  if (p == 3.0) return 1.0;
  if (w == 0.0) return std::pow(W, 1.0 - s);
  const double delta = W - w;
  const double eps = delta / w;
  if (eps < threshold) {
    const double b1 = (s - 1.0) / 2.0;
    const double b2 = (s - 1.0) * (s - 2.0) / 6.0;
    const double b3 = (s - 1.0) * (s - 2.0) * (s - 3.0) / 24.0;
    const double bracket = 1.0 + eps * (b1 + eps * (b2 + eps * b3));
    return std::pow(w, 1.0 - s) / (s * bracket);
  }
  return delta / (std::pow(w, s) * std::expm1(s * std::log1p(eps)));
}

} // namespace detail

inline double conformal_coefficient(const ConformalChart& chart, double uu,
                                    double vv) {
  detail::require_kminus(uu, vv);
  const double g = detail::coeff_base(chart.p, chart.diagonal_threshold, -uu, -vv);
  const double q = chart.p - 2.0;
  return std::pow(g, chart.p - 1.0) / (q * q);
}

// Continuous bounded extension used by the solver on rectangular grids that
// poke out of K- (u >= 0 is clamped to the cone boundary value). Inside K-
// it coincides with conformal_coefficient.
inline double conformal_coefficient_extended(const ConformalChart& chart,
                                             double uu, double vv) {
  const double w = uu < 0.0 ? -uu : 0.0;
  const double g = detail::coeff_base(chart.p, chart.diagonal_threshold, w, -vv);
  const double q = chart.p - 2.0;
  return std::pow(g, chart.p - 1.0) / (q * q);
}

// Analytic d/dt of c on K-:
//   dG/dt = (1/(p-2)) G^2/(2 r) [ (-v)^{-gamma} - (-u)^{-gamma} ],
//   gamma = (p-3)/(p-2), and dc/dt = (p-1) G^{p-2} dG/dt / (p-2)^2.
inline double conformal_coefficient_dt(const ConformalChart& chart, double uu,
                                       double vv) {
  detail::require_kminus(uu, vv);
  const double p = chart.p;
  if (p == 3.0) return 0.0;
  const double w = -uu, W = -vv;
  const double gamma = (p - 3.0) / (p - 2.0);
  const double g = detail::coeff_base(p, chart.diagonal_threshold, w, W);
  const double eps = (W - w) / w;
  // bracket/(2r) = w^{-gamma} expm1(-gamma log1p(eps)) / delta
  double ratio;
  if (eps < chart.diagonal_threshold) {
    const double b1 = (gamma + 1.0) / 2.0;
    const double b2 = (gamma + 1.0) * (gamma + 2.0) / 6.0;
    const double b3 = (gamma + 1.0) * (gamma + 2.0) * (gamma + 3.0) / 24.0;
    ratio = -gamma * std::pow(w, -gamma - 1.0) *
            (1.0 - eps * (b1 - eps * (b2 - eps * b3)));
  } else {
    ratio = std::pow(w, -gamma) * std::expm1(-gamma * std::log1p(eps)) /
            (W - w);
  }
  const double q = p - 2.0;
  const double dg_dt = g * g * ratio / q;
  return (p - 1.0) * std::pow(g, p - 2.0) * dg_dt / (q * q);
}

// ---------------------------------------------------------------------------
// Metric conformal factor: du~/du * dv~/dv = (p-2)^2 (u v)^{-(p-1)}.
// ---------------------------------------------------------------------------

inline double metric_conformal_factor(const ConformalChart& chart, double u,
                                      double v) {
  detail::require_kplus(u, v);
  const double q = chart.p - 2.0;
  return q * q * std::pow(u * v, -(chart.p - 1.0));
}

// Relative discrepancy between the analytic factor and a central
// finite-difference Jacobian of map_forward.
inline double metric_conformal_factor_check(const ConformalChart& chart,
                                            double u, double v,
                                            double rel_step = 1e-5) {
  detail::require_kplus(u, v);
  if (!(coord_r({u, v}) > 0.0))
    throw DomainError("metric factor check needs an off-axis point");
  const double q = chart.p - 2.0;
  auto f = [&](double x) { return -std::pow(x, -q); };
  const double du = rel_step * u, dv = rel_step * v;
  const double dU = (f(u + du) - f(u - du)) / (2.0 * du);
  const double dV = (f(v + dv) - f(v - dv)) / (2.0 * dv);
  const double fd = dU * dV;
  const double an = metric_conformal_factor(chart, u, v);
  return std::abs(fd - an) / std::abs(an);
}

// ---------------------------------------------------------------------------
// Regions of Figure-1 geometry.
// ---------------------------------------------------------------------------

enum class RegionKind { Kplus, Kminus, Kstrip, future_of_I, future_of_H };

struct Region {
  RegionKind kind = RegionKind::Kplus;
  double p = 3.0;   // used by future_of_H
  double rho = 0.0; // data support radius, used by both future regions

  bool contains(double t, double r) const {
    if (r < 0.0) return false;
    switch (kind) {
      case RegionKind::Kplus:
        return r < t;
      case RegionKind::Kminus:
        return r < -t;
      case RegionKind::Kstrip:
        return r < -t && t >= -1.0 && t < 0.0;
      case RegionKind::future_of_I:
        return t >= 1.0 && (t - r) >= 1.0 - rho;
      case RegionKind::future_of_H: {
        if (!(r < -t)) return false;
        const double uu = t + r, vv = t - r;
        const double vmin = -std::pow(1.0 - rho, -(p - 2.0));
        return uu >= -1.0 && vv >= vmin;
      }
    }
    return false;
  }

  static Region kplus() { return {RegionKind::Kplus, 3.0, 0.0}; }
  static Region kminus() { return {RegionKind::Kminus, 3.0, 0.0}; }
  static Region kstrip() { return {RegionKind::Kstrip, 3.0, 0.0}; }
  static Region future_of_data(double rho) {
    return {RegionKind::future_of_I, 3.0, rho};
  }
  static Region future_of_curve(double p, double rho) {
    return {RegionKind::future_of_H, p, rho};
  }
};

// ---------------------------------------------------------------------------
// Curve H = Phi({1} x [0, rho]) and interval J on {t = -1}.
// ---------------------------------------------------------------------------

struct HCurve {
  double p = 3.0;
  double rho = 0.0;

  // (t~, r~) of Phi(1 + r, 1 - r) for r in [0, rho]
  std::pair<double, double> point(double r) const {
    const double q = p - 2.0;
    const double uu = -std::pow(1.0 + r, -q);
    const double vv = -std::pow(1.0 - r, -q);
    return {0.5 * (uu + vv), 0.5 * (uu - vv)};
  }
};

struct JInterval {
  double r_inner = 0.0;
  double r_outer = 0.0;
};

struct HAndJ {
  HCurve curve;
  JInterval interval;
};

inline HAndJ curve_H_and_interval_J(const ConformalChart& chart, double rho) {
  chart.validate();
  if (rho < 0.0) throw DomainError("support radius must be >= 0");
  const double ap = alpha_p(chart.p);
  if (!(rho < ap)) {
    std::ostringstream os;
    os.precision(17);
    os << "support radius " << rho << " must be strictly below alpha_p("
       << chart.p << ") = " << ap;
    throw SupportViolationError(os.str());
  }
  HAndJ out;
  out.curve = {chart.p, rho};
  // The ingoing null ray off the endpoint Phi(1 + rho, 1 - rho) meets
  // {t = -1} at r~ = -1 - v~_endpoint.
  const double vv_end = -std::pow(1.0 - rho, -(chart.p - 2.0));
  out.interval.r_inner = 0.0;
  out.interval.r_outer = -1.0 - vv_end;
  return out;
}

// ---------------------------------------------------------------------------
// Push/pull of solutions between the cones.
//   push: psi(x~) = Omega(Phi^{-1}(x~))^{-1} phi(Phi^{-1}(x~)), stored r~ psi
//   pull: phi(x)  = Omega(x) psi(Phi(x)), stored r phi
// ---------------------------------------------------------------------------

enum class PushMode { strict, partial };

struct MappedField {
  SpacetimeField field;
  // per stored node: 1 if the value was produced by the map, 0 otherwise
  std::vector<std::uint8_t> covered;

  bool is_covered(long level, long j) const {
    return covered[static_cast<std::size_t>(level) * field.radial_nodes() + j] != 0;
  }
};

namespace detail {

inline bool preimage_inside(const SpacetimeField& src, double t, double r) {
  const double slack_t = 1e-9 * std::max(1.0, src.last_time() - src.spec().t_start);
  const double slack_r = 1e-9 * std::max(1.0, src.spec().r_max);
  return t >= src.spec().t_start - slack_t && t <= src.last_time() + slack_t &&
         r >= -slack_r && r <= src.spec().r_max + slack_r;
}

} // namespace detail

inline MappedField push_solution(const SpacetimeField& src,
                                 const ConformalChart& chart,
                                 const GridSpec& target,
                                 PushMode mode = PushMode::strict) {
  chart.validate();
  target.validate();
  if (src.kind() != FieldKind::forward)
    throw DomainError("push_solution expects a forward-cone source field");
  MappedField out{SpacetimeField(target, chart.p, FieldKind::transformed, 1), {}};
  out.covered.assign(out.field.values().size(), 0);
  const long nt = out.field.stored_levels();
  const long nr = out.field.radial_nodes();
  for (long n = 0; n < nt; ++n) {
    const double tt = out.field.time_of(n);
    for (long j = 0; j < nr; ++j) {
      const double rr = out.field.radius(j);
      const double uu = tt + rr, vv = tt - rr;
      if (!(uu < 0.0)) continue; // outside K-
      const UV pre = map_inverse(chart, uu, vv);
      const double t = coord_t(pre), r = coord_r(pre);
      if (!detail::preimage_inside(src, t, r)) {
        if (mode == PushMode::strict) {
          std::ostringstream os;
          os.precision(17);
          os << "push target corner (t~=" << tt << ", r~=" << rr
             << ") has preimage (t=" << t << ", r=" << r
             << ") outside the source field";
          throw CoverageError(os.str(), tt, rr);
        }
        continue;
      }
      const double phi = interpolate(src, t, r);
      const double om = omega(chart, pre.u, pre.v);
      out.field.chi(n, j) = rr * (phi / om);
      out.covered[static_cast<std::size_t>(n) * nr + j] = 1;
    }
  }
  return out;
}

inline MappedField pull_solution(const SpacetimeField& src,
                                 const ConformalChart& chart,
                                 const GridSpec& target,
                                 PushMode mode = PushMode::strict) {
  chart.validate();
  target.validate();
  if (src.kind() != FieldKind::transformed)
    throw DomainError("pull_solution expects a backward-cone source field");
  MappedField out{SpacetimeField(target, chart.p, FieldKind::forward, 1), {}};
  out.covered.assign(out.field.values().size(), 0);
  const long nt = out.field.stored_levels();
  const long nr = out.field.radial_nodes();
  for (long n = 0; n < nt; ++n) {
    const double t = out.field.time_of(n);
    for (long j = 0; j < nr; ++j) {
      const double r = out.field.radius(j);
      const double u = t + r, v = t - r;
      if (!(v > 0.0)) continue; // outside K+
      const UV img = map_forward(chart, u, v);
      const double tt = coord_t(img), rr = coord_r(img);
      if (!detail::preimage_inside(src, tt, rr)) {
        if (mode == PushMode::strict) {
          std::ostringstream os;
          os.precision(17);
          os << "pull target corner (t=" << t << ", r=" << r
             << ") has image (t~=" << tt << ", r~=" << rr
             << ") outside the source field";
          throw CoverageError(os.str(), t, r);
        }
        continue;
      }
      const double psi = interpolate(src, tt, rr);
      const double om = omega(chart, u, v);
      out.field.chi(n, j) = r * (om * psi);
      out.covered[static_cast<std::size_t>(n) * nr + j] = 1;
    }
  }
  return out;
}

} // namespace confwave
