#include "ddm/forward.hpp"

#include <cmath>
#include <string>

#include "ddm/specfun.hpp"

// Kress quadrature in brief: with 2n nodes t_j = j pi/n, a 2pi-periodic
// integrand split as K(t,s) = K1(t,s) ln(4 sin^2((t-s)/2)) + K2(t,s) is
// integrated by
//     sum_j R_{|i-j|} K1(t_i,t_j) + (pi/n) sum_j K2(t_i,t_j),
//     R_p = -(2pi/n) sum_{m=1}^{n-1} cos(m p pi/n)/m - (-1)^p pi/n^2,
// which is exact for trigonometric polynomials of degree < n against the log
// factor, giving spectral accuracy for analytic kernels.

namespace ddm {
namespace {

std::vector<double> kress_weights(int n) {
  std::vector<double> r(2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    double s = 0.0;
    for (int m = 1; m < n; ++m) s += std::cos(m * p * pi / n) / m;
    double parity = (p % 2 == 0) ? 1.0 : -1.0;
    r[p] = -(2.0 * pi / n) * s - parity * pi / (n * n);
  }
  return r;
}

// log(4 sin^2((t-s)/2)) for t != s
double log4sin2(double dt) {
  double v = 2.0 * std::sin(0.5 * dt);
  return std::log(v * v);
}

}  // namespace

std::pair<int, int> aperture_indices(const ApertureArc& arc, int m) {
  if (m < 2) throw ConfigError("aperture: m must be >= 2");
  auto snap = [m](double multiple_of_pi, const char* which) {
    double v = multiple_of_pi * m;
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
      throw ConfigError(std::string("aperture endpoint ") + which +
                        " is not aligned to the pi/m direction grid");
    return static_cast<int>(r);
  };
  int lo = snap(arc.lo_pi, "lo");
  int hi = snap(arc.hi_pi, "hi");
  if (lo < 0 || hi > 2 * m || hi <= lo)
    throw ConfigError("aperture arc must satisfy 0 <= lo < hi <= 2 (in units of pi)");
  return {lo + 1, hi};
}

double direction_angle(int m, int i) { return (i - 1) * pi / m; }

Vec2 direction(int m, int i) { return unit_vector(direction_angle(m, i)); }

NystromSystem assemble_nystrom(const ParametricShape& shape, double k, const SolverOptions& opt) {
  if (opt.n_q < 4 || opt.n_q % 2 != 0) throw ConfigError("N_q must be even and >= 4");
  if (!(k > 0.0)) throw ConfigError("wavenumber must be positive");
  const int nq = opt.n_q;
  const int n = nq / 2;
  const double eta = k;  // combined-field coupling

  NystromSystem sys;
  sys.n_q = nq;
  sys.k = k;
  sys.nodes.resize(nq);
  sys.tangents.resize(nq);
  std::vector<Vec2> second(nq);
  std::vector<double> speed(nq);
  for (int j = 0; j < nq; ++j) {
    double t = pi * j / n;
    sys.nodes[j] = shape.point(t);
    sys.tangents[j] = shape.derivative(t);
    second[j] = shape.second_derivative(t);
    speed[j] = sys.tangents[j].norm();
  }

  const std::vector<double> R = kress_weights(n);
  const double w = pi / n;
  sys.matrix = CMatrix(nq, nq);

  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < nq; ++j) {
      Complex entry;
      if (i == j) {
        // diagonal limits of the kernel split
        double sp = speed[j];
        Complex k2s(-euler_gamma / (2.0 * pi) - std::log(k * sp / 2.0) / (2.0 * pi), 0.25);
        k2s *= sp;
        double k1s = -sp / (4.0 * pi);
        entry = R[0] * k1s + w * k2s;
        if (opt.combined_field) {
          Vec2 nrm{sys.tangents[j].y, -sys.tangents[j].x};
          double k2d = (second[j].dot(nrm)) / (4.0 * pi * sp * sp);
          entry += Complex(0.0, eta) * (w * k2d + Complex(0.5, 0.0));
        }
      } else {
        Vec2 diff = sys.nodes[i] - sys.nodes[j];
        double r = diff.norm();
        double lg = log4sin2(pi * (i - j) / n);
        double sp = speed[j];
        double k1s = -bessel_j(0, k * r) * sp / (4.0 * pi);
        Complex full_s = Complex(0.0, 0.25) * hankel1(0, k * r) * sp;
        Complex k2s = full_s - k1s * lg;
        int p = std::abs(i - j);
        entry = R[p] * k1s + w * k2s;
        if (opt.combined_field) {
          Vec2 nrm{sys.tangents[j].y, -sys.tangents[j].x};
          double c = diff.dot(nrm);
          double k1d = -k * bessel_j(1, k * r) * c / (4.0 * pi * r);
          Complex full_d = Complex(0.0, 0.25 * k) * hankel1(1, k * r) * (c / r);
          Complex k2d = full_d - k1d * lg;
          entry += Complex(0.0, eta) * (R[p] * k1d + w * k2d);
        }
      }
      sys.matrix.at(i, j) = entry;
    }
  }
  return sys;
}

FarFieldSolver::FarFieldSolver(const ParametricShape& shape, double k, SolverOptions opt)
    : sys_(assemble_nystrom(shape, k, opt)), opt_(opt), lu_(sys_.matrix) {
  cond_ = lu_.cond1_estimate(norm1(sys_.matrix));
  if (cond_ > opt_.cond_limit)
    throw NumericalError("boundary system nearly singular (condition estimate " +
                         std::to_string(cond_) + "), interior resonance suspected");
}

std::vector<Complex> FarFieldSolver::density(const Vec2& d) const {
  const int nq = sys_.n_q;
  std::vector<Complex> rhs(nq);
  for (int i = 0; i < nq; ++i) {
    double phase = sys_.k * sys_.nodes[i].dot(d);
    rhs[i] = -Complex(std::cos(phase), std::sin(phase));
  }
  lu_.solve_in_place(rhs);
  return rhs;
}

std::vector<Complex> FarFieldSolver::far_field(const Vec2& d,
                                               const std::vector<double>& obs_angles) const {
  const int nq = sys_.n_q;
  const double k = sys_.k;
  const double eta = k;
  const double w = 2.0 * pi / nq;
  std::vector<Complex> mu = density(d);

  const Complex c0 = std::exp(Complex(0.0, pi / 4.0)) / std::sqrt(8.0 * pi * k);
  std::vector<Complex> out;
  out.reserve(obs_angles.size());
  for (double theta : obs_angles) {
    Vec2 xhat = unit_vector(theta);
    Complex acc(0.0, 0.0);
    for (int j = 0; j < nq; ++j) {
      double phase = -k * xhat.dot(sys_.nodes[j]);
      Complex e(std::cos(phase), std::sin(phase));
      double factor = sys_.tangents[j].norm();
      if (opt_.combined_field) {
        Vec2 nrm{sys_.tangents[j].y, -sys_.tangents[j].x};
        factor += eta * k * xhat.dot(nrm);
      }
      acc += e * factor * mu[j];
    }
    out.push_back(c0 * w * acc);
  }
  return out;
}

std::vector<Complex> solve_far_field(const ParametricShape& shape, double k, const Vec2& d,
                                     const std::vector<double>& obs_angles,
                                     const SolverOptions& opt) {
  FarFieldSolver solver(shape, k, opt);
  return solver.far_field(d, obs_angles);
}

Msrm assemble_msrm(const ParametricShape& shape, double k, int m, const SolverOptions& opt) {
  if (m < 2) throw ConfigError("MSRM: m must be >= 2");
  FarFieldSolver solver(shape, k, opt);
  std::vector<double> obs(2 * m);
  for (int j = 1; j <= 2 * m; ++j) obs[j - 1] = direction_angle(m, j);
  Msrm f;
  f.m = m;
  f.entries = CMatrix(2 * m, 2 * m);
  for (int i = 1; i <= 2 * m; ++i) {
    std::vector<Complex> col = solver.far_field(direction(m, i), obs);
    for (int j = 1; j <= 2 * m; ++j) f.entries.at(j - 1, i - 1) = col[j - 1];
  }
  return f;
}

LimitedAperture extract_limited(const Msrm& msrm, const ApertureArc& phi, const ApertureArc& psi) {
  auto [no, No] = aperture_indices(phi, msrm.m);
  auto [ni, Ni] = aperture_indices(psi, msrm.m);
  LimitedAperture l;
  l.m = msrm.m;
  l.n_obs = no;
  l.big_n_obs = No;
  l.n_inc = ni;
  l.big_n_inc = Ni;
  l.entries = CMatrix(No - no + 1, Ni - ni + 1);
  for (int j = no; j <= No; ++j)
    for (int i = ni; i <= Ni; ++i) l.entries.at(j - no, i - ni) = msrm.entries.at(j - 1, i - 1);
  return l;
}

LimitedAperture add_noise(const LimitedAperture& data, double sigma, StableRng& rng) {
  if (sigma < 0.0) throw ConfigError("noise level must be >= 0");
  LimitedAperture out = data;
  if (sigma == 0.0) return out;
  for (Complex& v : out.entries.data) {
    double delta = rng.uniform(-1.0, 1.0);
    v *= (1.0 + sigma * delta);
  }
  return out;
}

double reciprocity_residual(const Msrm& msrm) {
  const int n = 2 * msrm.m;
  double num = 0.0, den = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      Complex a = msrm.entries.at(j, i);
      Complex b = msrm.entries.at((i + msrm.m) % n, (j + msrm.m) % n);
      num += std::norm(a - b);
      den += std::norm(a);
    }
  }
  if (den == 0.0) return 0.0;
  return std::sqrt(num / den);
}

Complex disk_farfield(double k, double radius, double theta_obs, double theta_inc) {
  if (!(k > 0.0) || !(radius > 0.0)) throw ConfigError("disk_farfield needs k, radius > 0");
  const double ka = k * radius;
  const Complex lead = -std::exp(Complex(0.0, -pi / 4.0)) * std::sqrt(2.0 / (pi * k));
  Complex sum = bessel_j(0, ka) / hankel1(0, ka);
  const double dphi = theta_obs - theta_inc;
  for (int n = 1; n <= 30; ++n)
    sum += 2.0 * std::cos(n * dphi) * bessel_j(n, ka) / hankel1(n, ka);
  return lead * sum;
}

}  // namespace ddm
