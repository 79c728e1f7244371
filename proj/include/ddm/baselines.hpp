#pragma once

// Classical reconstruction baselines: a quasi-Newton (BFGS) minimizer driving
// the aperture-restricted physics objective from a zero start, and the direct
// sampling indicator that localizes the scatterer with one bilinear form per
// probe point.

#include <functional>
#include <vector>

#include "ddm/common.hpp"
#include "ddm/forward.hpp"
#include "ddm/geometry.hpp"
#include "ddm/physics.hpp"

namespace ddm {

// value = fn(x, grad); the callee resizes and fills grad.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct BfgsOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;  // infinity norm of the gradient
};

struct BfgsResult {
  std::vector<double> x;
  std::vector<double> history;  // objective values, history[0] = start point
  int iterations = 0;
  bool degraded = false;  // line search failed; x is the best iterate reached
};

// BFGS with a strong-Wolfe line search (c1 = 1e-4, c2 = 0.9). The inverse
// Hessian approximation is reset to the identity on curvature violations, so
// it stays symmetric positive definite and every step is a descent step.
BfgsResult bfgs_minimize(const Objective& fn, std::vector<double> x0,
                         const BfgsOptions& opt = {});

struct CdmOptions {
  BfgsOptions bfgs;
  bool validate_gradient = false;  // finite-difference check at the start point
};

struct CdmResult {
  FourierCurve q;
  std::vector<Complex> g;  // Herglotz coefficients, one per direction (2m)
  std::vector<double> history;
  int iterations = 0;
  bool degraded = false;
};

// Classical decomposition: minimize the measured-data objective over the
// 4m + 2*n_lambda + 1 real unknowns (interleaved g, then curve coefficients).
CdmResult run_cdm(const LimitedAperture& data, const PhysicsConfig& cfg, int n_lambda,
                  const CdmOptions& opt = {});

// Equally spaced probe grid; values are row-major with x varying fastest.
struct SamplingGrid {
  int resolution = 100;
  double lo = -4.0;
  double hi = 4.0;
  std::vector<double> values;

  double coord(int i) const { return lo + (hi - lo) * i / (resolution - 1); }
  double at(int iy, int ix) const { return values[static_cast<std::size_t>(iy) * resolution + ix]; }
};

// Direct sampling indicator
//   I(h) = |sum_{i,j} e^{-ik h.d_i} F(j,i) e^{ik h.xhat_j}|
// with i, j running over the data's incidence and observation windows.
SamplingGrid run_dsm(const LimitedAperture& data, double k);

}  // namespace ddm
