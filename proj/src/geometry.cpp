#include "ddm/geometry.hpp"

#include <cmath>
#include <string>

namespace ddm {

FourierCurve::FourierCurve(double q0_, std::vector<double> a_, std::vector<double> b_, double s_)
    : q0(q0_), a(std::move(a_)), b(std::move(b_)), s(s_) {
  if (a.size() != b.size())
    throw ConfigError("FourierCurve: cosine/sine coefficient counts differ");
  if (!(s > 0.0)) throw ConfigError("FourierCurve: decay exponent must be positive");
}

FourierCurve FourierCurve::zeros(int n_lambda, double s) {
  if (n_lambda <= 0) throw ConfigError("FourierCurve: N_lambda must be positive");
  return FourierCurve(0.0, std::vector<double>(n_lambda, 0.0), std::vector<double>(n_lambda, 0.0), s);
}

FourierCurve FourierCurve::from_coeffs(const std::vector<double>& q, double s) {
  if (q.size() < 3 || q.size() % 2 == 0)
    throw ConfigError("FourierCurve: coefficient vector must have odd size 2N+1, got " +
                      std::to_string(q.size()));
  int n = static_cast<int>(q.size() / 2);
  FourierCurve c = zeros(n, s);
  c.q0 = q[0];
  for (int i = 0; i < n; ++i) {
    c.a[i] = q[1 + 2 * i];
    c.b[i] = q[2 + 2 * i];
  }
  return c;
}

std::vector<double> FourierCurve::coeffs() const {
  std::vector<double> q;
  q.reserve(2 * a.size() + 1);
  q.push_back(q0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    q.push_back(a[i]);
    q.push_back(b[i]);
  }
  return q;
}

double q_eval(const FourierCurve& c, double t) {
  double v = c.q0 / std::sqrt(2.0 * pi);
  const double rt_pi = std::sqrt(pi);
  for (std::size_t i = 0; i < c.a.size(); ++i) {
    double n = static_cast<double>(i + 1);
    double decay = std::pow(n, c.s);
    v += (c.a[i] / decay) * std::cos(n * t) / rt_pi + (c.b[i] / decay) * std::sin(n * t) / rt_pi;
  }
  return v;
}

double q_derivative(const FourierCurve& c, double t) {
  double v = 0.0;
  const double rt_pi = std::sqrt(pi);
  for (std::size_t i = 0; i < c.a.size(); ++i) {
    double n = static_cast<double>(i + 1);
    double decay = std::pow(n, c.s);
    v += n * (-(c.a[i] / decay) * std::sin(n * t) + (c.b[i] / decay) * std::cos(n * t)) / rt_pi;
  }
  return v;
}

double q_second_derivative(const FourierCurve& c, double t) {
  double v = 0.0;
  const double rt_pi = std::sqrt(pi);
  for (std::size_t i = 0; i < c.a.size(); ++i) {
    double n = static_cast<double>(i + 1);
    double decay = std::pow(n, c.s);
    v += -n * n * ((c.a[i] / decay) * std::cos(n * t) + (c.b[i] / decay) * std::sin(n * t)) / rt_pi;
  }
  return v;
}

Vec2 boundary_point(const FourierCurve& c, double t) {
  double r = std::exp(q_eval(c, t));
  return {r * std::cos(t), r * std::sin(t)};
}

Vec2 boundary_tangent(const FourierCurve& c, double t) {
  double r = std::exp(q_eval(c, t));
  double dq = q_derivative(c, t);
  double ct = std::cos(t), st = std::sin(t);
  return {r * (dq * ct - st), r * (dq * st + ct)};
}

Vec2 boundary_second_derivative(const FourierCurve& c, double t) {
  double r = std::exp(q_eval(c, t));
  double dq = q_derivative(c, t);
  double ddq = q_second_derivative(c, t);
  double ct = std::cos(t), st = std::sin(t);
  double radial = ddq + dq * dq - 1.0;
  return {r * (radial * ct - 2.0 * dq * st), r * (radial * st + 2.0 * dq * ct)};
}

ParametricShape ParametricShape::from_curve(FourierCurve c) {
  ParametricShape s;
  s.tag = ShapeTag::fourier;
  s.fourier = std::move(c);
  return s;
}

ParametricShape ParametricShape::disk(double radius) {
  if (!(radius > 0.0)) throw ConfigError("disk radius must be positive");
  FourierCurve c = FourierCurve::zeros(8);
  c.q0 = std::log(radius) * std::sqrt(2.0 * pi);
  return from_curve(std::move(c));
}

ParametricShape ParametricShape::pear() {
  ParametricShape s;
  s.tag = ShapeTag::pear;
  return s;
}

ParametricShape ParametricShape::rounded_square() {
  ParametricShape s;
  s.tag = ShapeTag::rounded_square;
  return s;
}

Vec2 ParametricShape::point(double t) const {
  switch (tag) {
    case ShapeTag::fourier:
      return boundary_point(fourier, t);
    case ShapeTag::pear: {
      double rho = 1.5 + 0.3 * std::sin(3.0 * t);
      return {rho * std::cos(t), rho * std::sin(t)};
    }
    case ShapeTag::rounded_square: {
      double ct = std::cos(t), st = std::sin(t);
      return {0.75 * (ct * ct * ct + ct), 0.75 * (st * st * st + st)};
    }
  }
  throw NumericalError("unreachable shape tag");
}

Vec2 ParametricShape::derivative(double t) const {
  switch (tag) {
    case ShapeTag::fourier:
      return boundary_tangent(fourier, t);
    case ShapeTag::pear: {
      double rho = 1.5 + 0.3 * std::sin(3.0 * t);
      double drho = 0.9 * std::cos(3.0 * t);
      double ct = std::cos(t), st = std::sin(t);
      return {drho * ct - rho * st, drho * st + rho * ct};
    }
    case ShapeTag::rounded_square: {
      double ct = std::cos(t), st = std::sin(t);
      return {-0.75 * st * (3.0 * ct * ct + 1.0), 0.75 * ct * (3.0 * st * st + 1.0)};
    }
  }
  throw NumericalError("unreachable shape tag");
}

Vec2 ParametricShape::second_derivative(double t) const {
  switch (tag) {
    case ShapeTag::fourier:
      return boundary_second_derivative(fourier, t);
    case ShapeTag::pear: {
      double rho = 1.5 + 0.3 * std::sin(3.0 * t);
      double drho = 0.9 * std::cos(3.0 * t);
      double ddrho = -2.7 * std::sin(3.0 * t);
      double ct = std::cos(t), st = std::sin(t);
      return {(ddrho - rho) * ct - 2.0 * drho * st, (ddrho - rho) * st + 2.0 * drho * ct};
    }
    case ShapeTag::rounded_square: {
      double ct = std::cos(t), st = std::sin(t);
      double xx = 0.75 * (6.0 * ct * st * st - 3.0 * ct * ct * ct - ct);
      double yy = 0.75 * (6.0 * st * ct * ct - 3.0 * st * st * st - st);
      return {xx, yy};
    }
  }
  throw NumericalError("unreachable shape tag");
}

SurfaceGrid make_surface_grid(const ParametricShape& shape, int n_t) {
  if (n_t <= 0) throw ConfigError("SurfaceGrid: N_t must be positive");
  SurfaceGrid g;
  g.n_t = n_t;
  g.nodes.resize(n_t);
  g.points.resize(n_t);
  g.derivatives.resize(n_t);
  for (int l = 0; l < n_t; ++l) {
    double t = 2.0 * pi * l / n_t;
    g.nodes[l] = t;
    g.points[l] = shape.point(t);
    g.derivatives[l] = shape.derivative(t);
  }
  return g;
}

FourierCurve sample_random_curve(StableRng& rng, int n_lambda, double s) {
  FourierCurve c = FourierCurve::zeros(n_lambda, s);
  c.q0 = rng.uniform(0.5, 1.5);
  for (int n = 1; n <= n_lambda; ++n) {
    if (n <= 4) {
      c.a[n - 1] = rng.normal(0.0, 0.2);
      c.b[n - 1] = rng.normal(0.0, 0.2);
    } else {
      c.a[n - 1] = rng.uniform(0.0, 0.1);
      c.b[n - 1] = rng.uniform(0.0, 0.1);
    }
  }
  return c;
}

std::pair<double, double> polar_angle_radius(const ParametricShape& shape, double t) {
  Vec2 p = shape.point(t);
  double r = p.norm();
  if (r < 1e-12)
    throw NumericalError("polar_angle_radius: point too close to the origin for a polar angle");
  double zeta = std::atan2(p.y, p.x);
  if (zeta < 0.0) zeta += 2.0 * pi;
  return {zeta, r};
}

}  // namespace ddm
