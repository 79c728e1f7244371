#include <cmath>
#include <vector>

#include "ddm/baselines.hpp"
#include "doctest.h"

using namespace ddm;

namespace {

void check_history_nonincreasing(const std::vector<double>& h) {
  for (size_t i = 0; i + 1 < h.size(); ++i) CHECK(h[i + 1] <= h[i]);
}

LimitedAperture disk_data(double k, int m) {
  Msrm f = assemble_msrm(ParametricShape::disk(), k, m);
  return extract_limited(f, ApertureArc{0.0, 2.0}, ApertureArc{0.0, 2.0});
}

}  // namespace

TEST_CASE("bfgs minimizes a separable quadratic to gradient tolerance") {
  const std::vector<double> lam{1.0, 4.0, 9.0};
  const std::vector<double> rhs{1.0, 1.0, 1.0};
  Objective fn = [&](const std::vector<double>& x, std::vector<double>& g) {
    g.resize(3);
    double f = 0.0;
    for (int i = 0; i < 3; ++i) {
      f += 0.5 * lam[i] * x[i] * x[i] - rhs[i] * x[i];
      g[i] = lam[i] * x[i] - rhs[i];
    }
    return f;
  };
  BfgsResult r = bfgs_minimize(fn, {0.0, 0.0, 0.0});
  CHECK_FALSE(r.degraded);
  CHECK(r.iterations < 50);
  for (int i = 0; i < 3; ++i) CHECK(r.x[i] == doctest::Approx(rhs[i] / lam[i]).epsilon(1e-6));
  REQUIRE(r.history.size() == static_cast<size_t>(r.iterations) + 1);
  CHECK(r.history.front() == 0.0);
  check_history_nonincreasing(r.history);
}

TEST_CASE("bfgs crosses the Rosenbrock valley") {
  Objective fn = [](const std::vector<double>& x, std::vector<double>& g) {
    g.resize(2);
    const double a = x[1] - x[0] * x[0];
    g[0] = -400.0 * a * x[0] - 2.0 * (1.0 - x[0]);
    g[1] = 200.0 * a;
    return 100.0 * a * a + (1.0 - x[0]) * (1.0 - x[0]);
  };
  BfgsResult r = bfgs_minimize(fn, {-1.2, 1.0});
  CHECK_FALSE(r.degraded);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
  check_history_nonincreasing(r.history);
}

TEST_CASE("bfgs reports degraded convergence when no Wolfe step exists") {
  // |x| with the subgradient +1 at 0: the slope never flattens, so the strong
  // Wolfe curvature condition is unsatisfiable and the search must give up.
  Objective fn = [](const std::vector<double>& x, std::vector<double>& g) {
    g.resize(1);
    g[0] = x[0] >= 0.0 ? 1.0 : -1.0;
    return std::abs(x[0]);
  };
  BfgsResult r = bfgs_minimize(fn, {1.0});
  CHECK(r.degraded);
  CHECK(r.history.back() <= 1.0);  // best iterate retained
  check_history_nonincreasing(r.history);
}

TEST_CASE("bfgs stops immediately at a stationary start") {
  Objective fn = [](const std::vector<double>& x, std::vector<double>& g) {
    g.assign(x.size(), 0.0);
    return 7.0;
  };
  BfgsResult r = bfgs_minimize(fn, {2.0, 3.0});
  CHECK(r.iterations == 0);
  CHECK(r.history.size() == 1);
  CHECK_FALSE(r.degraded);
  CHECK(r.x[0] == 2.0);

  CHECK_THROWS_AS(bfgs_minimize(fn, {}), ConfigError);
}

TEST_CASE("dsm grid geometry and degenerate inputs") {
  LimitedAperture zero;
  zero.m = 4;
  zero.n_obs = 1;
  zero.big_n_obs = 8;
  zero.n_inc = 1;
  zero.big_n_inc = 8;
  zero.entries = CMatrix(8, 8);
  SamplingGrid g = run_dsm(zero, 3.0);
  REQUIRE(g.values.size() == 10000);
  CHECK(g.coord(0) == -4.0);
  CHECK(g.coord(99) == 4.0);
  CHECK(g.coord(50) - g.coord(49) == doctest::Approx(8.0 / 99.0).epsilon(1e-14));
  for (double v : g.values) CHECK(v == 0.0);

  // one unit entry: the bilinear form is a single unimodular phase everywhere
  zero.entries.at(2, 5) = Complex(1.0, 0.0);
  SamplingGrid one = run_dsm(zero, 3.0);
  for (double v : one.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dsm indicator ignores a global phase rotation of the data") {
  LimitedAperture data = disk_data(3.0, 8);
  SamplingGrid base = run_dsm(data, 3.0);
  LimitedAperture rotated = data;
  const Complex phase = std::polar(1.0, 1.234);
  for (Complex& e : rotated.entries.data) e *= phase;
  SamplingGrid rot = run_dsm(rotated, 3.0);
  for (size_t i = 0; i < base.values.size(); ++i)
    CHECK(rot.values[i] == doctest::Approx(base.values[i]).epsilon(1e-11));
}

TEST_CASE("dsm argmax localizes the unit disk boundary") {
  LimitedAperture data = disk_data(3.0, 16);
  SamplingGrid g = run_dsm(data, 3.0);
  size_t best = 0;
  for (size_t i = 1; i < g.values.size(); ++i)
    if (g.values[i] > g.values[best]) best = i;
  const double hx = g.coord(static_cast<int>(best) % g.resolution);
  const double hy = g.coord(static_cast<int>(best) / g.resolution);
  CHECK(std::abs(std::hypot(hx, hy) - 1.0) <= 0.5);
}

TEST_CASE("cdm on noiseless full-aperture disk data recovers the radius") {
  PhysicsConfig cfg;
  cfg.k = 3.0;
  cfg.m = 8;
  LimitedAperture data = disk_data(cfg.k, cfg.m);

  CdmOptions opt;
  opt.validate_gradient = true;  // every coordinate, central differences
  CdmResult r = run_cdm(data, cfg, 4, opt);

  check_history_nonincreasing(r.history);
  CHECK(r.history.back() < r.history.front());
  CHECK(r.history.back() <= 1e-4);
  REQUIRE(static_cast<int>(r.g.size()) == 16);
  REQUIRE(r.q.order() == 4);
  for (int l = 0; l < 64; ++l) {
    const double r_l = std::exp(q_eval(r.q, 2.0 * pi * l / 64));
    CHECK(std::abs(r_l - 1.0) <= 0.02);
  }
}

TEST_CASE("cdm rejects mismatched grids") {
  PhysicsConfig cfg;
  cfg.m = 8;
  LimitedAperture data = disk_data(3.0, 4);  // data on a coarser direction grid
  CHECK_THROWS_AS(run_cdm(data, cfg, 4), ConfigError);
}
