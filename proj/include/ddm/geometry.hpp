#pragma once

// Boundary curves. Recovery always happens in the starlike Fourier class
// r(t) = e^{q(t)}; the pear and rounded-square shapes exist as fixed
// out-of-distribution test obstacles.

#include <utility>
#include <vector>

#include "ddm/common.hpp"
#include "ddm/rng.hpp"

namespace ddm {

// q(t) = q0/sqrt(2pi) + sum_n (a_n/n^s) cos(nt)/sqrt(pi) + (b_n/n^s) sin(nt)/sqrt(pi)
// The curve is e^{q(t)}(cos t, sin t), closed and strictly positive by
// construction. Coefficient set Q = (q0, a1, b1, ..., a_N, b_N).
struct FourierCurve {
  double q0 = 0.0;
  std::vector<double> a;
  std::vector<double> b;
  double s = 1.0;

  FourierCurve() = default;
  FourierCurve(double q0_, std::vector<double> a_, std::vector<double> b_, double s_ = 1.0);

  static FourierCurve zeros(int n_lambda, double s = 1.0);
  // Unpacks (q0, a1, b1, ..., a_N, b_N); size must be odd.
  static FourierCurve from_coeffs(const std::vector<double>& q, double s = 1.0);

  std::vector<double> coeffs() const;
  int order() const { return static_cast<int>(a.size()); }
};

double q_eval(const FourierCurve& c, double t);
double q_derivative(const FourierCurve& c, double t);
double q_second_derivative(const FourierCurve& c, double t);

Vec2 boundary_point(const FourierCurve& c, double t);
Vec2 boundary_tangent(const FourierCurve& c, double t);
Vec2 boundary_second_derivative(const FourierCurve& c, double t);

enum class ShapeTag { fourier, pear, rounded_square };

struct ParametricShape {
  ShapeTag tag = ShapeTag::fourier;
  FourierCurve fourier;

  static ParametricShape from_curve(FourierCurve c);
  static ParametricShape disk(double radius = 1.0);
  static ParametricShape pear();           // (1.5 + 0.3 sin 3t)(cos t, sin t)
  static ParametricShape rounded_square(); // (3/4)(cos^3 t + cos t, sin^3 t + sin t)

  Vec2 point(double t) const;
  Vec2 derivative(double t) const;
  Vec2 second_derivative(double t) const;
};

// Uniform parameter grid t_l = 2pi(l-1)/N_t with exact analytic derivatives.
struct SurfaceGrid {
  int n_t = 0;
  std::vector<double> nodes;
  std::vector<Vec2> points;
  std::vector<Vec2> derivatives;
};

SurfaceGrid make_surface_grid(const ParametricShape& shape, int n_t);

// Training distribution: q0 ~ U(0.5,1.5); a_n, b_n ~ N(0, 0.2^2) for n <= 4;
// a_n, b_n ~ U(0, 0.1) for n in {5,...,N_lambda}.
FourierCurve sample_random_curve(StableRng& rng, int n_lambda = 8, double s = 1.0);

// (zeta, r): polar angle in [0, 2pi) and radius of the shape point at t.
// For starlike shapes zeta == t (mod 2pi).
std::pair<double, double> polar_angle_radius(const ParametricShape& shape, double t);

}  // namespace ddm
