#include "ddm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ddm {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

// Strong-Wolfe search along p from x; keeps the last evaluation so the caller
// can reuse the gradient without recomputing it.
class LineSearch {
 public:
  LineSearch(const Objective& fn, const std::vector<double>& x, const std::vector<double>& p,
             double f0, double slope0)
      : fn_(fn), x_(x), p_(p), f0_(f0), slope0_(slope0), xt_(x.size()), gt_(x.size()) {}

  bool search() {
    double a_prev = 0.0;
    double f_prev = f0_;
    double a = 1.0;
    for (int it = 0; it < 25; ++it) {
      eval(a);
      if (f_ > f0_ + kC1 * a * slope0_ || (it > 0 && f_ >= f_prev)) return zoom(a_prev, f_prev, a);
      if (std::abs(slope_) <= -kC2 * slope0_) return true;
      if (slope_ >= 0.0) return zoom(a, f_, a_prev);
      a_prev = a;
      f_prev = f_;
      a *= 2.0;
    }
    return false;
  }

  double alpha() const { return alpha_; }
  double value() const { return f_; }
  const std::vector<double>& point() const { return xt_; }
  const std::vector<double>& grad() const { return gt_; }

 private:
  // Bisection zoom on [lo, hi]; lo always satisfies the sufficient-decrease
  // condition with value flo, hi only brackets.
  bool zoom(double lo, double flo, double hi) {
    for (int it = 0; it < 50; ++it) {
      if (std::abs(hi - lo) < 1e-14 * std::max(1.0, std::abs(lo))) return false;
      const double a = 0.5 * (lo + hi);
      eval(a);
      if (f_ > f0_ + kC1 * a * slope0_ || f_ >= flo) {
        hi = a;
      } else {
        if (std::abs(slope_) <= -kC2 * slope0_) return true;
        if (slope_ * (hi - lo) >= 0.0) hi = lo;
        lo = a;
        flo = f_;
      }
    }
    return false;
  }

  void eval(double a) {
    for (std::size_t i = 0; i < x_.size(); ++i) xt_[i] = x_[i] + a * p_[i];
    f_ = fn_(xt_, gt_);
    slope_ = dot(gt_, p_);
    alpha_ = a;
  }

  const Objective& fn_;
  const std::vector<double>& x_;
  const std::vector<double>& p_;
  double f0_;
  double slope0_;
  std::vector<double> xt_, gt_;
  double alpha_ = 0.0, f_ = 0.0, slope_ = 0.0;
};

}  // namespace

BfgsResult bfgs_minimize(const Objective& fn, std::vector<double> x0, const BfgsOptions& opt) {
  const int n = static_cast<int>(x0.size());
  if (n == 0) throw ConfigError("bfgs_minimize: empty start vector");

  BfgsResult res;
  res.x = std::move(x0);
  std::vector<double> h(static_cast<std::size_t>(n) * n, 0.0);
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (int i = 0; i < n; ++i) h[static_cast<std::size_t>(i) * n + i] = 1.0;
  };
  reset_h();

  std::vector<double> g(n);
  double fx = fn(res.x, g);
  if (!std::isfinite(fx)) throw NumericalError("bfgs_minimize: objective not finite at start");
  res.history.push_back(fx);

  std::vector<double> p(n), s(n), y(n), hy(n);
  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    if (inf_norm(g) <= opt.grad_tol) break;

    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += h[static_cast<std::size_t>(i) * n + j] * g[j];
      p[i] = -acc;
    }
    double slope = dot(p, g);
    if (slope >= 0.0) {  // rounding broke descent; restart from steepest descent
      reset_h();
      for (int i = 0; i < n; ++i) p[i] = -g[i];
      slope = -dot(g, g);
    }

    LineSearch ls(fn, res.x, p, fx, slope);
    if (!ls.search()) {
      res.degraded = true;
      break;
    }
    res.iterations = iter;
    for (int i = 0; i < n; ++i) {
      s[i] = ls.alpha() * p[i];
      y[i] = ls.grad()[i] - g[i];
    }
    res.x = ls.point();
    fx = ls.value();
    g = ls.grad();
    res.history.push_back(fx);
    if (!std::isfinite(fx)) throw NumericalError("bfgs_minimize: objective diverged");

    const double sy = dot(s, y);
    if (sy <= 1e-10 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y))) {
      reset_h();  // curvature condition failed; a BFGS update would lose SPD
      continue;
    }
    const double rho = 1.0 / sy;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += h[static_cast<std::size_t>(i) * n + j] * y[j];
      hy[i] = acc;
    }
    const double yhy = dot(y, hy);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        h[static_cast<std::size_t>(i) * n + j] +=
            rho * ((1.0 + rho * yhy) * s[i] * s[j] - s[i] * hy[j] - hy[i] * s[j]);
  }
  return res;
}

CdmResult run_cdm(const LimitedAperture& data, const PhysicsConfig& cfg, int n_lambda,
                  const CdmOptions& opt) {
  if (n_lambda < 0) throw ConfigError("run_cdm: n_lambda must be nonnegative");
  const int n = 4 * cfg.m + 2 * n_lambda + 1;
  Objective fn = [&](const std::vector<double>& x, std::vector<double>& grad) {
    return cdm_objective(x, grad, data, cfg, n_lambda);
  };

  std::vector<double> x0(n, 0.0);
  if (opt.validate_gradient) {
    std::vector<double> ad, gp, gm;
    fn(x0, ad);
    const double h = 1e-6;
    for (int c = 0; c < n; ++c) {
      std::vector<double> xp = x0, xm = x0;
      xp[c] += h;
      xm[c] -= h;
      const double fd = (fn(xp, gp) - fn(xm, gm)) / (2.0 * h);
      if (std::abs(ad[c] - fd) > 1e-5 * std::max({1e-3, std::abs(fd), std::abs(ad[c])}))
        throw NumericalError("run_cdm: analytic gradient failed the finite-difference check");
    }
  }

  BfgsResult b = bfgs_minimize(fn, std::move(x0), opt.bfgs);
  CdmResult res;
  res.history = std::move(b.history);
  res.iterations = b.iterations;
  res.degraded = b.degraded;
  res.g.resize(2 * cfg.m);
  for (int i = 0; i < 2 * cfg.m; ++i) res.g[i] = Complex(b.x[2 * i], b.x[2 * i + 1]);
  res.q = FourierCurve::from_coeffs(std::vector<double>(b.x.begin() + 4 * cfg.m, b.x.end()),
                                    cfg.s);
  return res;
}

SamplingGrid run_dsm(const LimitedAperture& data, double k) {
  SamplingGrid grid;
  const int res = grid.resolution;
  grid.values.assign(static_cast<std::size_t>(res) * res, 0.0);

  const int nobs = data.obs_count();
  const int ninc = data.inc_count();
  std::vector<Vec2> obs(nobs), inc(ninc);
  for (int j = 0; j < nobs; ++j) obs[j] = direction(data.m, data.n_obs + j);
  for (int i = 0; i < ninc; ++i) inc[i] = direction(data.m, data.n_inc + i);

#pragma omp parallel for schedule(static)
  for (int node = 0; node < res * res; ++node) {
    const Vec2 h{grid.coord(node % res), grid.coord(node / res)};
    Complex total(0.0, 0.0);
    for (int i = 0; i < ninc; ++i) {
      Complex col(0.0, 0.0);
      for (int j = 0; j < nobs; ++j)
        col += data.entries.at(j, i) * std::polar(1.0, k * h.dot(obs[j]));
      total += std::polar(1.0, -k * h.dot(inc[i])) * col;
    }
    grid.values[node] = std::abs(total);
  }
  return grid;
}

}  // namespace ddm
