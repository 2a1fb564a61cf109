#pragma once

// Uniform (t, r) grids, field storage for the reduced variable chi = r*phi,
// compactly supported initial-data families and interpolation services.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "confwave/errors.hpp"

namespace confwave {

namespace detail {

inline bool commensurate(double extent, double step, long* count = nullptr) {
  if (step <= 0.0 || extent <= 0.0) return false;
  const double q = extent / step;
  const double n = std::round(q);
  if (n < 1.0) return false;
  if (std::abs(q - n) > 1e-9 * std::max(1.0, std::abs(q))) return false;
  if (count) *count = static_cast<long>(n);
  return true;
}

inline std::string fmt_point(double t, double r) {
  std::ostringstream os;
  os.precision(17);
  os << "(t=" << t << ", r=" << r << ")";
  return os.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// GridSpec
// ---------------------------------------------------------------------------

struct GridSpec {
  double t_start = 1.0;
  double t_end = 2.0;
  double r_max = 1.0;
  double h = 0.01;     // spatial step
  double lambda = 0.9; // Courant ratio dt/h in (0, 1]

  void validate() const {
    if (!(h > 0.0)) throw ConfigurationError("h", "spatial step must be > 0");
    if (!(r_max > 0.0)) throw ConfigurationError("r_max", "outer radius must be > 0");
    if (!(t_end > t_start))
      throw ConfigurationError("t_end", "time interval must have t_end > t_start");
    if (!(lambda > 0.0) || lambda > 1.0)
      throw ConfigurationError("lambda", "Courant ratio must lie in (0, 1]");
    if (!detail::commensurate(r_max, h))
      throw ConfigurationError("r_max", "r_max must be an integer multiple of h");
    if (!detail::commensurate(t_end - t_start, lambda * h))
      throw ConfigurationError(
          "t_end", "(t_end - t_start) must be an integer multiple of lambda*h");
  }

  double dt() const { return lambda * h; }

  long steps() const {
    return static_cast<long>(std::llround((t_end - t_start) / dt()));
  }
  long time_levels() const { return steps() + 1; }
  long radial_nodes() const {
    return static_cast<long>(std::llround(r_max / h)) + 1;
  }

  double radius(long j) const { return static_cast<double>(j) * h; }
  double time(long n) const { return t_start + static_cast<double>(n) * dt(); }
};

// Smallest commensurate t_end >= requested (plus optional extra steps).
inline double snap_t_end(double t_start, double t_end_requested, double h,
                         double lambda, long extra_steps = 0) {
  const double dt = lambda * h;
  const double q = (t_end_requested - t_start) / dt;
  long n = static_cast<long>(std::ceil(q - 1e-9));
  if (n < 1) n = 1;
  n += extra_steps;
  return t_start + static_cast<double>(n) * dt;
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

enum class ProfileKind { bump };

struct InitialDataSpec {
  double amplitude = 1.0;          // A
  double support_radius = 0.4;     // rho
  int smoothness_exponent = 4;     // m >= 3
  double velocity_amplitude = 0.0; // B
  ProfileKind profile = ProfileKind::bump;

  void validate_shape() const {
    if (smoothness_exponent < 3)
      throw ConfigurationError("smoothness_exponent", "bump exponent must be >= 3");
    if (!(support_radius > 0.0))
      throw ConfigurationError("support_radius", "support radius must be > 0");
  }
};

// (1 - (r/rho)^2)^m for r < rho, exactly zero outside.
inline double bump_profile(double r, double amplitude, double rho, int m) {
  const double s = r / rho;
  if (!(std::abs(s) < 1.0)) return 0.0;
  return amplitude * std::pow(1.0 - s * s, m);
}

inline double bump_profile_derivative(double r, double amplitude, double rho,
                                      int m) {
  const double s = r / rho;
  if (!(std::abs(s) < 1.0)) return 0.0;
  return amplitude * static_cast<double>(m) * std::pow(1.0 - s * s, m - 1) *
         (-2.0 * s / rho);
}

// ---------------------------------------------------------------------------
// TimeSlice: (phi, d_t phi) along a constant-t line
// ---------------------------------------------------------------------------

struct TimeSlice {
  double t = 0.0;
  std::vector<double> r_nodes;
  std::vector<double> phi;
  std::vector<double> phi_t;

  void validate() const {
    if (r_nodes.size() != phi.size() || r_nodes.size() != phi_t.size())
      throw DegenerateInputError("time slice arrays must share length");
    if (r_nodes.size() < 3)
      throw DegenerateInputError("time slice needs at least 3 nodes");
    if (r_nodes.front() != 0.0)
      throw DegenerateInputError("time slice radial nodes must start at 0");
  }

  double spacing() const { return r_nodes.size() > 1 ? r_nodes[1] - r_nodes[0] : 0.0; }
};

// ---------------------------------------------------------------------------
// SpacetimeField: chi(t, r) = r*phi(t, r) on a uniform lattice.
// Rows may be stored with a time stride > 1 for long runs.
// ---------------------------------------------------------------------------

enum class FieldKind : int { forward = 0, transformed = 1 };

class SpacetimeField {
 public:
  SpacetimeField() = default;

  SpacetimeField(GridSpec spec, double p, FieldKind kind, int time_stride = 1)
      : spec_(spec), p_(p), kind_(kind), stride_(time_stride) {
    spec_.validate();
    if (stride_ < 1) throw ConfigurationError("store_every", "stride must be >= 1");
    nr_ = spec_.radial_nodes();
    nt_ = spec_.steps() / stride_ + 1;
    values_.assign(static_cast<std::size_t>(nt_) * nr_, 0.0);
  }

  const GridSpec& spec() const { return spec_; }
  double p() const { return p_; }
  FieldKind kind() const { return kind_; }
  int time_stride() const { return stride_; }

  long stored_levels() const { return nt_; }
  long radial_nodes() const { return nr_; }
  double stored_dt() const { return spec_.dt() * stride_; }
  double time_of(long level) const {
    return spec_.t_start + static_cast<double>(level) * stored_dt();
  }
  double last_time() const { return time_of(nt_ - 1); }
  double radius(long j) const { return spec_.radius(j); }

  double chi(long level, long j) const {
    return values_[static_cast<std::size_t>(level) * nr_ + j];
  }
  double& chi(long level, long j) {
    return values_[static_cast<std::size_t>(level) * nr_ + j];
  }
  std::span<const double> row(long level) const {
    return {values_.data() + static_cast<std::size_t>(level) * nr_,
            static_cast<std::size_t>(nr_)};
  }
  std::span<double> row(long level) {
    return {values_.data() + static_cast<std::size_t>(level) * nr_,
            static_cast<std::size_t>(nr_)};
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  GridSpec spec_;
  double p_ = 3.0;
  FieldKind kind_ = FieldKind::forward;
  int stride_ = 1;
  long nt_ = 0, nr_ = 0;
  std::vector<double> values_;
};

inline SpacetimeField build_grid(const GridSpec& spec, double p = 3.0,
                                 FieldKind kind = FieldKind::forward,
                                 int time_stride = 1) {
  return SpacetimeField(spec, p, kind, time_stride);
}

// ---------------------------------------------------------------------------
// sample_initial_data: bump family (phi0, phi1) at t = 1
// ---------------------------------------------------------------------------

// Maximal admissible support radius of the initial data: the image region J
// on {t = -1} stays compactly inside [0, 1[ exactly when rho < alpha_p.
inline double alpha_p(double p) {
  if (!(p > 2.0))
    throw DomainError("alpha_p requires p > 2");
  return 1.0 - std::pow(2.0, -1.0 / (p - 2.0));
}

inline TimeSlice sample_initial_data(const InitialDataSpec& data,
                                     const GridSpec& spec, double p) {
  spec.validate();
  data.validate_shape();
  if (std::abs(spec.t_start - 1.0) > 1e-12)
    throw ConfigurationError("t_start",
                             "forward initial data is given at t = 1");
  const double ap = alpha_p(p);
  if (!(data.support_radius < ap)) {
    std::ostringstream os;
    os.precision(17);
    os << "support radius " << data.support_radius
       << " must be strictly below alpha_p(" << p << ") = " << ap;
    throw SupportViolationError(os.str());
  }
  TimeSlice slice;
  slice.t = spec.t_start;
  const long nr = spec.radial_nodes();
  slice.r_nodes.resize(nr);
  slice.phi.resize(nr);
  slice.phi_t.resize(nr);
  for (long j = 0; j < nr; ++j) {
    const double r = spec.radius(j);
    slice.r_nodes[j] = r;
    slice.phi[j] = bump_profile(r, data.amplitude, data.support_radius,
                                data.smoothness_exponent);
    slice.phi_t[j] = bump_profile(r, data.velocity_amplitude,
                                  data.support_radius, data.smoothness_exponent);
  }
  return slice;
}

// ---------------------------------------------------------------------------
// Interpolation: cubic Lagrange in both directions on interior cells,
// quadratic in boundary cells. phi is recovered from chi; below r < 2h a
// one-sided radial fit through the origin avoids the 0/0 division.
// ---------------------------------------------------------------------------

namespace detail {

struct Stencil1D {
  long base = 0; // first node index
  int count = 0; // 3 or 4
  double w[4] = {0, 0, 0, 0};
  double dw[4] = {0, 0, 0, 0}; // d/dx weights (already divided by dx)
};

// x in index units (x = (value - origin)/dx), n nodes available.
inline Stencil1D make_stencil(double s, long n, double dx) {
  Stencil1D st;
  if (n < 3) throw DegenerateInputError("interpolation needs at least 3 nodes");
  long cell = static_cast<long>(std::floor(s));
  cell = std::clamp<long>(cell, 0, n - 2);
  if (n >= 4 && cell >= 1 && cell <= n - 3) {
    st.base = cell - 1;
    st.count = 4;
    const double x = s - static_cast<double>(st.base); // in [1, 2]
    const double x0 = x, x1 = x - 1.0, x2 = x - 2.0, x3 = x - 3.0;
    st.w[0] = -(x1 * x2 * x3) / 6.0;
    st.w[1] = (x0 * x2 * x3) / 2.0;
    st.w[2] = -(x0 * x1 * x3) / 2.0;
    st.w[3] = (x0 * x1 * x2) / 6.0;
    st.dw[0] = -((x2 * x3) + (x1 * x3) + (x1 * x2)) / 6.0 / dx;
    st.dw[1] = ((x2 * x3) + (x0 * x3) + (x0 * x2)) / 2.0 / dx;
    st.dw[2] = -((x1 * x3) + (x0 * x3) + (x0 * x1)) / 2.0 / dx;
    st.dw[3] = ((x1 * x2) + (x0 * x2) + (x0 * x1)) / 6.0 / dx;
  } else {
    st.base = std::clamp<long>(cell - 1, 0, n - 3);
    st.count = 3;
    const double x = s - static_cast<double>(st.base); // in [0, 2]
    const double x0 = x, x1 = x - 1.0, x2 = x - 2.0;
    st.w[0] = (x1 * x2) / 2.0;
    st.w[1] = -(x0 * x2);
    st.w[2] = (x0 * x1) / 2.0;
    st.dw[0] = (x1 + x2) / 2.0 / dx;
    st.dw[1] = -(x0 + x2) / dx;
    st.dw[2] = (x0 + x1) / 2.0 / dx;
  }
  return st;
}

// Cubic-through-origin radial fit: chi(r) ~ c1 r + c2 r^2 + c3 r^3 from the
// nodes (h, 2h, 3h). Returns phi(r) = chi(r)/r and its radial derivative.
struct AxisFit {
  double a, b, d, h;
  double phi(double r) const {
    const double s = r / h;
    return (a + s * (b + s * d)) / h;
  }
  double dphi_dr(double r) const {
    const double s = r / h;
    return (b + 2.0 * s * d) / (h * h);
  }
};

inline AxisFit make_axis_fit(double chi1, double chi2, double chi3, double h) {
  AxisFit f;
  f.h = h;
  f.d = (chi3 - 3.0 * chi2 + 3.0 * chi1) / 6.0;
  f.b = (4.0 * chi2 - 5.0 * chi1 - chi3) / 2.0;
  f.a = chi1 - f.b - f.d;
  return f;
}

// One-sided first derivative at r = 0 for a function vanishing there,
// exact for cubics through the origin.
inline double axis_derivative(double f1, double f2, double f3, double h) {
  return (18.0 * f1 - 9.0 * f2 + 2.0 * f3) / (6.0 * h);
}

} // namespace detail

struct ChiSample {
  double chi = 0, chi_t = 0, chi_r = 0;
};

struct PhiSample {
  double phi = 0, phi_t = 0, phi_r = 0;
};

namespace detail {

inline void check_domain(const SpacetimeField& f, double& t, double& r) {
  const double t0 = f.spec().t_start, t1 = f.last_time();
  const double slack_t = 1e-9 * std::max(1.0, t1 - t0);
  const double slack_r = 1e-9 * std::max(1.0, f.spec().r_max);
  if (t < t0 - slack_t || t > t1 + slack_t || r < -slack_r ||
      r > f.spec().r_max + slack_r)
    throw DomainError("interpolation query outside field domain at " +
                      fmt_point(t, r));
  t = std::clamp(t, t0, t1);
  r = std::clamp(r, 0.0, f.spec().r_max);
}

// chi (and optionally d/dt chi) time-interpolated at radial node j.
inline void time_interp_node(const SpacetimeField& f, const Stencil1D& ts,
                             long j, double* chi, double* chi_t) {
  double v = 0.0, vt = 0.0;
  for (int k = 0; k < ts.count; ++k) {
    const double c = f.chi(ts.base + k, j);
    v += ts.w[k] * c;
    if (chi_t) vt += ts.dw[k] * c;
  }
  *chi = v;
  if (chi_t) *chi_t = vt;
}

} // namespace detail

inline ChiSample sample_chi(const SpacetimeField& f, double t, double r,
                            bool want_derivs = true) {
  detail::check_domain(f, t, r);
  const double h = f.spec().h;
  const double dts = f.stored_dt();
  const auto ts = detail::make_stencil((t - f.spec().t_start) / dts,
                                       f.stored_levels(), dts);
  const auto rs = detail::make_stencil(r / h, f.radial_nodes(), h);
  ChiSample out;
  for (int k = 0; k < rs.count; ++k) {
    double c, ct;
    detail::time_interp_node(f, ts, rs.base + k, &c, want_derivs ? &ct : nullptr);
    out.chi += rs.w[k] * c;
    if (want_derivs) {
      out.chi_r += rs.dw[k] * c;
      out.chi_t += rs.w[k] * ct;
    }
  }
  return out;
}

inline PhiSample sample_phi(const SpacetimeField& f, double t, double r,
                            bool want_derivs = true) {
  detail::check_domain(f, t, r);
  const double h = f.spec().h;
  PhiSample out;
  if (r < 2.0 * h) {
    if (f.radial_nodes() < 4)
      throw DegenerateInputError("axis recovery needs at least 4 radial nodes");
    const double dts = f.stored_dt();
    const auto ts = detail::make_stencil((t - f.spec().t_start) / dts,
                                         f.stored_levels(), dts);
    double c[3], ct[3];
    for (int k = 0; k < 3; ++k)
      detail::time_interp_node(f, ts, 1 + k, &c[k],
                               want_derivs ? &ct[k] : nullptr);
    const auto fit = detail::make_axis_fit(c[0], c[1], c[2], h);
    out.phi = fit.phi(r);
    if (want_derivs) {
      out.phi_r = fit.dphi_dr(r);
      const auto fit_t = detail::make_axis_fit(ct[0], ct[1], ct[2], h);
      out.phi_t = fit_t.phi(r);
    }
    return out;
  }
  const ChiSample cs = sample_chi(f, t, r, want_derivs);
  out.phi = cs.chi / r;
  if (want_derivs) {
    out.phi_t = cs.chi_t / r;
    out.phi_r = (cs.chi_r - out.phi) / r;
  }
  return out;
}

// Value of phi at an arbitrary point of the grid rectangle.
inline double interpolate(const SpacetimeField& f, double t, double r) {
  return sample_phi(f, t, r, /*want_derivs=*/false).phi;
}

inline double interpolate_chi(const SpacetimeField& f, double t, double r) {
  return sample_chi(f, t, r, /*want_derivs=*/false).chi;
}

// ---------------------------------------------------------------------------
// Slice extraction from a stored field (centered stored-level differences).
// ---------------------------------------------------------------------------

inline TimeSlice slice_at(const SpacetimeField& f, long level) {
  if (level < 0 || level >= f.stored_levels())
    throw DomainError("slice level out of range");
  const long nr = f.radial_nodes();
  const double h = f.spec().h;
  const double dts = f.stored_dt();
  TimeSlice s;
  s.t = f.time_of(level);
  s.r_nodes.resize(nr);
  s.phi.resize(nr);
  s.phi_t.resize(nr);

  std::vector<double> chit(nr);
  const long last = f.stored_levels() - 1;
  if (level > 0 && level < last) {
    for (long j = 0; j < nr; ++j)
      chit[j] = (f.chi(level + 1, j) - f.chi(level - 1, j)) / (2.0 * dts);
  } else if (last >= 2 && level == 0) {
    for (long j = 0; j < nr; ++j)
      chit[j] = (-3.0 * f.chi(0, j) + 4.0 * f.chi(1, j) - f.chi(2, j)) /
                (2.0 * dts);
  } else if (last >= 2) { // level == last
    for (long j = 0; j < nr; ++j)
      chit[j] = (3.0 * f.chi(last, j) - 4.0 * f.chi(last - 1, j) +
                 f.chi(last - 2, j)) /
                (2.0 * dts);
  } else {
    for (long j = 0; j < nr; ++j)
      chit[j] = (f.chi(last, j) - f.chi(0, j)) / (static_cast<double>(last) * dts);
  }

  for (long j = 0; j < nr; ++j) {
    const double r = f.radius(j);
    s.r_nodes[j] = r;
    if (j == 0) {
      s.phi[j] = detail::axis_derivative(f.chi(level, 1), f.chi(level, 2),
                                         f.chi(level, 3), h);
      s.phi_t[j] = detail::axis_derivative(chit[1], chit[2], chit[3], h);
    } else {
      s.phi[j] = f.chi(level, j) / r;
      s.phi_t[j] = chit[j] / r;
    }
  }
  return s;
}

} // namespace confwave
