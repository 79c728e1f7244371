#include <doctest.h>

#include <cmath>

#include "ddm/geometry.hpp"
#include "ddm/rng.hpp"

using namespace ddm;

TEST_CASE("q_eval basic values") {
  FourierCurve zero = FourierCurve::zeros(8);
  CHECK(q_eval(zero, 0.0) == 0.0);
  CHECK(q_eval(zero, 2.17) == 0.0);

  FourierCurve constant = FourierCurve::zeros(8);
  constant.q0 = std::sqrt(2.0 * pi);
  CHECK(q_eval(constant, 1.234) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(boundary_point(constant, 0.0).x == doctest::Approx(std::exp(1.0)).epsilon(1e-14));

  FourierCurve single = FourierCurve::zeros(8);
  single.a[0] = std::sqrt(pi);
  CHECK(q_eval(single, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("boundary_point on simple curves") {
  FourierCurve circle = FourierCurve::zeros(8);
  Vec2 p0 = boundary_point(circle, 0.0);
  CHECK(p0.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(p0.y) <= 1e-15);
  Vec2 p1 = boundary_point(circle, pi / 2.0);
  CHECK(std::abs(p1.x) <= 1e-15);
  CHECK(p1.y == doctest::Approx(1.0).epsilon(1e-15));

  FourierCurve big = FourierCurve::zeros(8);
  big.q0 = std::sqrt(2.0 * pi);
  Vec2 p2 = boundary_point(big, pi);
  CHECK(p2.x == doctest::Approx(-std::exp(1.0)).epsilon(1e-14));
  CHECK(std::abs(p2.y) <= 1e-14);
}

TEST_CASE("boundary_tangent analytic derivatives") {
  FourierCurve circle = FourierCurve::zeros(8);
  Vec2 t0 = boundary_tangent(circle, 0.0);
  CHECK(std::abs(t0.x) <= 1e-15);
  CHECK(t0.y == doctest::Approx(1.0).epsilon(1e-15));
  for (double t : {0.1, 1.7, 4.4}) {
    CHECK(boundary_tangent(circle, t).norm() == doctest::Approx(1.0).epsilon(1e-14));
  }

  Vec2 pt = ParametricShape::pear().derivative(0.0);
  CHECK(pt.norm() == doctest::Approx(std::sqrt(1.5 * 1.5 + 0.9 * 0.9)).epsilon(1e-14));
}

TEST_CASE("tangent and curvature vectors match finite differences") {
  StableRng rng(42);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    FourierCurve c = sample_random_curve(rng);
    double t = rng.uniform(0.0, 2.0 * pi);
    Vec2 fd = (boundary_point(c, t + h) - boundary_point(c, t - h)) * (1.0 / (2.0 * h));
    Vec2 an = boundary_tangent(c, t);
    CHECK((fd - an).norm() <= 1e-6);
    Vec2 fd2 = (boundary_tangent(c, t + h) - boundary_tangent(c, t - h)) * (1.0 / (2.0 * h));
    Vec2 an2 = boundary_second_derivative(c, t);
    CHECK((fd2 - an2).norm() <= 1e-5);
  }
  for (const ParametricShape& s : {ParametricShape::pear(), ParametricShape::rounded_square()}) {
    for (int trial = 0; trial < 20; ++trial) {
      double t = rng.uniform(0.0, 2.0 * pi);
      Vec2 fd = (s.point(t + h) - s.point(t - h)) * (1.0 / (2.0 * h));
      CHECK((fd - s.derivative(t)).norm() <= 1e-6);
      Vec2 fd2 = (s.derivative(t + h) - s.derivative(t - h)) * (1.0 / (2.0 * h));
      CHECK((fd2 - s.second_derivative(t)).norm() <= 1e-5);
    }
  }
}

TEST_CASE("sample_random_curve distributions and determinism") {
  StableRng a(7), b(7);
  FourierCurve ca = sample_random_curve(a), cb = sample_random_curve(b);
  CHECK(ca.coeffs() == cb.coeffs());

  StableRng rng(123);
  double mean_q0 = 0.0, var_a2 = 0.0, mean_a2 = 0.0;
  const int n = 10000;
  std::vector<double> a2s(n);
  for (int i = 0; i < n; ++i) {
    FourierCurve c = sample_random_curve(rng);
    mean_q0 += c.q0;
    a2s[i] = c.a[1];
    CHECK(c.a[4] >= 0.0);  // n >= 5 coefficients are U(0, 0.1)
    CHECK(c.a[4] <= 0.1);
  }
  mean_q0 /= n;
  for (double v : a2s) mean_a2 += v;
  mean_a2 /= n;
  for (double v : a2s) var_a2 += (v - mean_a2) * (v - mean_a2);
  var_a2 /= (n - 1);
  CHECK(std::abs(mean_q0 - 1.0) <= 0.01);
  CHECK(std::abs(var_a2 - 0.04) <= 0.004);
}

TEST_CASE("sampled curves keep the origin inside") {
  StableRng rng(5150);
  for (int i = 0; i < 200; ++i) {
    FourierCurve c = sample_random_curve(rng);
    double rmin = 1e9;
    for (int l = 0; l < 128; ++l)
      rmin = std::min(rmin, boundary_point(c, 2.0 * pi * l / 128).norm());
    CHECK(rmin > 0.0);
  }
}

TEST_CASE("polar_angle_radius on the reference shapes") {
  auto circle = ParametricShape::disk(1.0);
  auto [zc, rc] = polar_angle_radius(circle, 1.3);
  CHECK(zc == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(rc == doctest::Approx(1.0).epsilon(1e-14));

  auto [zp, rp] = polar_angle_radius(ParametricShape::pear(), pi / 6.0);
  CHECK(zp == doctest::Approx(pi / 6.0).epsilon(1e-13));
  CHECK(rp == doctest::Approx(1.8).epsilon(1e-14));

  auto [zs, rs] = polar_angle_radius(ParametricShape::rounded_square(), pi / 4.0);
  CHECK(zs == doctest::Approx(pi / 4.0).epsilon(1e-13));
  CHECK(rs == doctest::Approx(9.0 / 8.0).epsilon(1e-14));
}

TEST_CASE("polar round trip for starlike curves") {
  StableRng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    FourierCurve c = sample_random_curve(rng);
    double t = rng.uniform(0.0, 2.0 * pi);
    auto [zeta, r] = polar_angle_radius(ParametricShape::from_curve(c), t);
    CHECK(std::abs(zeta - t) <= 1e-12);
    CHECK(r == doctest::Approx(std::exp(q_eval(c, t))).epsilon(1e-12));
  }
}

TEST_CASE("rounded square traces a monotone polar angle") {
  // supports the radius-per-angle error metric on the non-starlike case
  auto s = ParametricShape::rounded_square();
  const int n_t = 64;
  double prev = -1.0;
  double total = 0.0;
  for (int l = 0; l < n_t; ++l) {
    double t = 2.0 * pi * l / n_t;
    auto [zeta, r] = polar_angle_radius(s, t);
    if (l > 0) {
      double step = zeta - prev;
      if (step < -pi) step += 2.0 * pi;  // wrap once near 2pi
      CHECK(step > 0.0);
      total += step;
    }
    prev = zeta;
  }
  CHECK(total < 2.0 * pi);
  CHECK(total > 2.0 * pi * (1.0 - 2.0 / n_t));
}

TEST_CASE("surface grid layout") {
  auto s = ParametricShape::disk(1.0);
  SurfaceGrid g = make_surface_grid(s, 64);
  CHECK(g.n_t == 64);
  CHECK(g.nodes[0] == 0.0);
  CHECK(g.nodes[1] == doctest::Approx(2.0 * pi / 64).epsilon(1e-15));
  for (int l = 0; l < 64; ++l) {
    CHECK((g.points[l] - s.point(g.nodes[l])).norm() == 0.0);
    CHECK((g.derivatives[l] - s.derivative(g.nodes[l])).norm() == 0.0);
  }
}

TEST_CASE("coefficient packing round trip") {
  StableRng rng(31);
  FourierCurve c = sample_random_curve(rng);
  FourierCurve back = FourierCurve::from_coeffs(c.coeffs(), c.s);
  CHECK(back.coeffs() == c.coeffs());
  CHECK_THROWS_AS(FourierCurve::from_coeffs({1.0, 2.0}), ConfigError);
}
