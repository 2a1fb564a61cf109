#include <doctest.h>

#include <cmath>
#include <random>

#include "confwave/conformal.hpp"

using namespace confwave;

TEST_CASE("alpha_p values") {
  CHECK(alpha_p(3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(alpha_p(4.0) == doctest::Approx(0.29289321881345254).epsilon(1e-14));
  CHECK(alpha_p(5.0) == doctest::Approx(0.20629947401590021).epsilon(1e-14));
  CHECK_THROWS_AS(alpha_p(2.0), DomainError);
  // p >= 3 keeps alpha_p <= 1/2
  for (double p : {3.0, 3.3, 4.0, 4.9}) CHECK(alpha_p(p) <= 0.5);
}

TEST_CASE("map forward and inverse pinned values") {
  ConformalChart c3{3.0, 1e-4}, c4{4.0, 1e-4};
  auto a = map_forward(c3, 2.0, 1.0);
  CHECK(a.u == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(a.v == doctest::Approx(-1.0).epsilon(1e-15));
  auto b = map_forward(c4, 2.0, 1.0);
  CHECK(b.u == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(b.v == doctest::Approx(-1.0).epsilon(1e-15));
  auto ax = map_forward(c3, 1.0, 1.0);
  CHECK(ax.u == doctest::Approx(-1.0));
  CHECK(ax.v == doctest::Approx(-1.0));

  auto inv = map_inverse(c3, -0.5, -1.0);
  CHECK(inv.u == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(inv.v == doctest::Approx(1.0).epsilon(1e-14));
  auto inv4 = map_inverse(c4, -0.0625, -1.0);
  CHECK(inv4.u == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(inv4.v == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(map_forward(c3, -1.0, 0.5), DomainError);
  CHECK_THROWS_AS(map_forward(c3, 1.0, 2.0), OrientationError);
  CHECK_THROWS_AS(map_inverse(c3, 0.5, -1.0), DomainError);
}

TEST_CASE("round trip is the identity to 1e-12 relative") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> logu(-2.0, 2.5), frac(1e-6, 1.0);
  for (double p : {3.0, 3.7, 4.5}) {
    ConformalChart ch{p, 1e-4};
    for (int i = 0; i < 1000; ++i) {
      const double u = std::exp(logu(gen));
      const double v = u * (1.0 - 0.999 * frac(gen));
      const auto img = map_forward(ch, u, v);
      const auto back = map_inverse(ch, img.u, img.v);
      CHECK(std::abs(back.u - u) / u < 1e-12);
      CHECK(std::abs(back.v - v) / v < 1e-12);
    }
  }
}

TEST_CASE("omega pinned values and bound") {
  ConformalChart c3{3.0, 1e-4}, c4{4.0, 1e-4};
  // (t, r) = (1.5, 0.5): Omega = 1/(t^2 - r^2) for p = 3
  CHECK(omega(c3, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(omega(c4, 2.0, 1.0) == doctest::Approx(0.75).epsilon(1e-14));
  // diagonal limit (p-2)/t^{p-1} at u = v = 2
  CHECK(omega(c3, 2.0, 2.0) == doctest::Approx(0.25).epsilon(1e-14));

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> logu(-1.5, 2.0), frac(0.0, 1.0);
  for (double p : {3.0, 3.5, 4.0, 4.9}) {
    ConformalChart ch{p, 1e-4};
    for (int i = 0; i < 500; ++i) {
      const double u = std::exp(logu(gen));
      const double v = u * (1.0 - 0.999 * frac(gen));
      const double om = omega(ch, u, v);
      CHECK(om > 0.0);
      CHECK(om <= (p - 2.0) / (u * std::pow(v, p - 2.0)) * (1 + 1e-12));
    }
  }
}

TEST_CASE("r Omega equals r o Phi across the series seam") {
  for (double p : {3.0, 3.5, 4.0, 4.5}) {
    ConformalChart ch{p, 1e-4};
    for (double u : {0.7, 1.3, 2.9}) {
      for (double delta : {3e-6, 5e-5, 9.9e-5, 1.01e-4, 2e-4, 1e-3, 0.3}) {
        const double v = u * (1.0 - delta);
        const double r_omega = coord_r({u, v}) * omega(ch, u, v);
        const long double q = static_cast<long double>(p) - 2.0L;
        const long double rr = 0.5L * (powl(v, -q) - powl(u, -q));
        CHECK(std::abs(static_cast<double>(
                  (static_cast<long double>(r_omega) - rr) / rr)) < 1e-12);
      }
    }
  }
}

TEST_CASE("conformal coefficient pinned values") {
  ConformalChart c3{3.0, 1e-4}, c4{4.0, 1e-4};
  // p = 3: identically one, bitwise
  CHECK(conformal_coefficient(c3, -0.3, -1.7) == 1.0);
  CHECK(conformal_coefficient(c3, -0.5, -0.5) == 1.0);
  CHECK(conformal_coefficient(c3, -0.5, -0.5 * (1 + 1e-7)) == 1.0);
  // p = 4 off-diagonal and diagonal values
  CHECK(conformal_coefficient(c4, -0.25, -1.0) ==
        doctest::Approx(0.84375).epsilon(1e-14));
  CHECK(conformal_coefficient(c4, -1.0, -1.0) ==
        doctest::Approx(2.0).epsilon(1e-14));
  // diagonal limit consistent with nearby off-diagonal values
  const double near = conformal_coefficient(c4, -1.0, -1.0 - 1e-9);
  CHECK(near == doctest::Approx(2.0).epsilon(1e-7));
  CHECK_THROWS_AS(conformal_coefficient(c4, 0.1, -1.0), DomainError);
}

TEST_CASE("coefficient sign, monotonicity, analytic time derivative") {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> ut(-2.0, -0.05), frac(0.0, 0.995);
  for (double p : {3.0, 3.5, 4.0, 4.5}) {
    ConformalChart ch{p, 1e-4};
    for (int i = 0; i < 1000; ++i) {
      const double t = ut(gen);
      const double r = frac(gen) * (-t);
      const double c = conformal_coefficient(ch, t + r, t - r);
      CHECK(c >= 0.0);
      const double d = 1e-6;
      const double fd = (conformal_coefficient(ch, t + d + r, t + d - r) -
                         conformal_coefficient(ch, t - d + r, t - d - r)) /
                        (2 * d);
      CHECK(fd <= 1e-10);
      const double an = conformal_coefficient_dt(ch, t + r, t - r);
      CHECK(an <= 0.0);
      CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(an)) + 1e-7);
    }
  }
}

TEST_CASE("metric conformal factor") {
  ConformalChart c3{3.0, 1e-4}, c4{4.0, 1e-4};
  CHECK(metric_conformal_factor(c3, 2.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(metric_conformal_factor(c4, 2.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(metric_conformal_factor_check(c3, 2.0, 1.0) < 1e-6);
  CHECK(metric_conformal_factor_check(c4, 3.1, 0.4) < 1e-6);
}

TEST_CASE("transformation law for smooth test functions") {
  // box(Omega Phi*h) = (p-2)^2 (uv)^{-(p-1)} Omega Phi*(box h) + O(h^2)
  // for h1 = t^2 + r^2 (box h1 = -4) and h2 = t r^2 (box h2 = -6t).
  for (double p : {3.0, 4.0}) {
    ConformalChart ch{p, 1e-4};
    auto img_t = [&](double t, double r) {
      const auto i = map_forward(ch, t + r, t - r);
      return coord_t(i);
    };
    auto img_r = [&](double t, double r) {
      const auto i = map_forward(ch, t + r, t - r);
      return coord_r(i);
    };
    for (int which : {0, 1}) {
      auto htil = [&](double tt, double rr) {
        return which == 0 ? tt * tt + rr * rr : tt * rr * rr;
      };
      auto box_htil = [&](double tt, double) {
        return which == 0 ? -4.0 : -6.0 * tt;
      };
      auto composite = [&](double t, double r) {
        return omega(ch, t + r, t - r) * htil(img_t(t, r), img_r(t, r));
      };
      double errs[2];
      int k = 0;
      for (double step : {1.0 / 200, 1.0 / 400}) {
        const double dt = 0.9 * step;
        double worst = 0.0;
        for (double t = 2.0; t <= 2.6; t += 0.1) {
          for (double r = 0.4; r <= 1.2; r += 0.1) {
            const double lhs =
                (composite(t + dt, r) - 2 * composite(t, r) + composite(t - dt, r)) /
                    (dt * dt) -
                (composite(t, r + step) - 2 * composite(t, r) + composite(t, r - step)) /
                    (step * step) -
                (composite(t, r + step) - composite(t, r - step)) / (step * r);
            const double u = t + r, v = t - r;
            const double rhs = (p - 2) * (p - 2) *
                               std::pow(u * v, -(p - 1.0)) *
                               omega(ch, u, v) * box_htil(img_t(t, r), img_r(t, r));
            worst = std::max(worst, std::abs(lhs - rhs));
          }
        }
        errs[k++] = worst;
      }
      CHECK(errs[0] / errs[1] > 3.0);
      CHECK(errs[0] / errs[1] < 5.0);
    }
  }
}

TEST_CASE("region predicates") {
  CHECK(Region::kplus().contains(2.0, 1.0));
  CHECK_FALSE(Region::kplus().contains(1.0, 2.0));
  CHECK(Region::kminus().contains(-1.0, 0.5));
  CHECK_FALSE(Region::kminus().contains(-0.5, 0.6));
  CHECK(Region::kstrip().contains(-0.7, 0.2));
  CHECK_FALSE(Region::kstrip().contains(-1.5, 0.2));

  // Phi maps the future of I into the future of H
  const double p = 3.5, rho = 0.3;
  ConformalChart ch{p, 1e-4};
  const auto fI = Region::future_of_data(rho);
  const auto fH = Region::future_of_curve(p, rho);
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> ut(1.0, 6.0), ur(0.0, 1.0);
  for (int i = 0; i < 400; ++i) {
    const double t = ut(gen);
    const double r = ur(gen) * (t - 1.0 + rho);
    if (!fI.contains(t, r)) continue;
    const auto img = map_forward(ch, t + r, t - r);
    CHECK(fH.contains(coord_t(img), coord_r(img)));
  }
}

TEST_CASE("curve H and interval J") {
  ConformalChart c3{3.0, 1e-4};
  // rho -> 0 degenerates H to (-1, 0)
  const auto tiny = curve_H_and_interval_J(c3, 1e-12);
  const auto p0 = tiny.curve.point(0.0);
  CHECK(p0.first == doctest::Approx(-1.0));
  CHECK(p0.second == doctest::Approx(0.0));
  CHECK(tiny.interval.r_outer == doctest::Approx(0.0).epsilon(1e-9));

  // p = 3, rho = 0.4 endpoint: Phi(1.4, 0.6) = (t~, r~) = (-25/21, 10/21)
  const auto hj = curve_H_and_interval_J(c3, 0.4);
  const auto e = hj.curve.point(0.4);
  CHECK(e.first == doctest::Approx(-25.0 / 21.0).epsilon(1e-14));
  CHECK(e.second == doctest::Approx(10.0 / 21.0).epsilon(1e-14));
  CHECK(hj.interval.r_outer == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  // J stays compactly inside [0, 1) for all rho < alpha_p, p >= 3
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> up(3.0, 4.99), frac(0.0, 0.999);
  for (int i = 0; i < 300; ++i) {
    const double p = up(gen);
    const double rho = frac(gen) * alpha_p(p);
    ConformalChart ch{p, 1e-4};
    const auto r = curve_H_and_interval_J(ch, rho);
    CHECK(r.interval.r_outer < 1.0);
  }
  CHECK_THROWS_AS(curve_H_and_interval_J(c3, 0.6), SupportViolationError);
}

TEST_CASE("push and pull of solutions") {
  const double p = 3.0;
  ConformalChart ch{p, 1e-4};
  // source phi := Omega on K+ solves the free equation; psi should be 1
  GridSpec src_spec{1.0, 3.0, 2.0, 1.0 / 128, 1.0};
  SpacetimeField src(src_spec, p, FieldKind::forward, 1);
  for (long n = 0; n < src.stored_levels(); ++n)
    for (long j = 0; j < src.radial_nodes(); ++j) {
      const double t = src.time_of(n), r = src.radius(j);
      src.chi(n, j) = (t - r > 0.0) ? r * omega(ch, t + r, t - r) : 0.0;
    }

  // a target that is fully covered: preimages of t~ in [-0.9, -0.6],
  // r~ <= 0.25 stay well inside [1, 3] x [0, 2]
  GridSpec tgt{-0.9, -0.9 + 38.0 / 128, 0.25, 1.0 / 128, 1.0};
  const auto pushed = push_solution(src, ch, tgt, PushMode::strict);
  for (long n = 0; n < pushed.field.stored_levels(); ++n)
    for (long j = 1; j < pushed.field.radial_nodes(); ++j) {
      const double psi = pushed.field.chi(n, j) / pushed.field.radius(j);
      CHECK(psi == doctest::Approx(1.0).epsilon(1e-7));
    }

  // mirror: psi := 1 pulls back to phi = Omega
  SpacetimeField one(tgt, p, FieldKind::transformed, 1);
  for (long n = 0; n < one.stored_levels(); ++n)
    for (long j = 0; j < one.radial_nodes(); ++j)
      one.chi(n, j) = one.radius(j);
  GridSpec back{1.2, 1.2 + 52.0 / 256, 0.0625, 1.0 / 256, 1.0};
  const auto pulled = pull_solution(one, ch, back, PushMode::strict);
  for (long n = 0; n < pulled.field.stored_levels(); ++n)
    for (long j = 1; j < pulled.field.radial_nodes(); ++j) {
      const double t = pulled.field.time_of(n), r = pulled.field.radius(j);
      CHECK(pulled.field.chi(n, j) / r ==
            doctest::Approx(omega(ch, t + r, t - r)).epsilon(1e-7));
    }

  // pull(push(phi)) returns phi up to interpolation error
  const auto round = pull_solution(pushed.field, ch, back, PushMode::strict);
  for (long n = 0; n < round.field.stored_levels(); ++n)
    for (long j = 1; j < round.field.radial_nodes(); ++j) {
      const double t = round.field.time_of(n), r = round.field.radius(j);
      const double expect = r * omega(ch, t + r, t - r);
      CHECK(round.field.chi(n, j) == doctest::Approx(expect).epsilon(1e-6));
    }

  // zero maps to zero
  SpacetimeField zsrc(src_spec, p, FieldKind::forward, 1);
  const auto zp = push_solution(zsrc, ch, tgt, PushMode::strict);
  for (double v : zp.field.values()) CHECK(v == 0.0);

  // uncovered target raises a coverage error in strict mode
  GridSpec far{-0.9, -0.9 + 45.0 / 64, 1.0, 1.0 / 64, 1.0};
  CHECK_THROWS_AS(push_solution(src, ch, far, PushMode::strict), CoverageError);
  const auto partial = push_solution(src, ch, far, PushMode::partial);
  bool any_covered = false, any_uncovered = false;
  for (long n = 0; n < partial.field.stored_levels(); ++n)
    for (long j = 0; j < partial.field.radial_nodes(); ++j)
      (partial.is_covered(n, j) ? any_covered : any_uncovered) = true;
  CHECK(any_covered);
  CHECK(any_uncovered);
}
