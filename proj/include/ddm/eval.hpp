#pragma once

// Reconstruction-quality metrics and the input-noise sensitivity study: the
// relative boundary error between an exact obstacle and a recovered radial
// curve, and a Monte Carlo estimate of how the training objective responds to
// multiplicative data noise (quadratic in the noise level for smooth maps).

#include <cstdint>
#include <vector>

#include "ddm/common.hpp"
#include "ddm/forward.hpp"
#include "ddm/geometry.hpp"
#include "ddm/network.hpp"
#include "ddm/physics.hpp"

namespace ddm {

struct BoundaryError {
  double value = 0.0;             // relative L2 mismatch of the radii
  std::vector<double> residuals;  // signed exact-minus-recovered radius per angle
  ShapeTag exact_tag = ShapeTag::fourier;
  ShapeTag recovered_tag = ShapeTag::fourier;
};

// Compares radii on the uniform angle grid. Starlike exact shapes are read at
// zeta_l = t_l directly; the rounded square is resampled at the polar angle of
// its boundary point, which must be strictly increasing along the curve. The
// recovered radius is e^{q(zeta_l)}; denominators always use the exact radii.
BoundaryError boundary_error(const ParametricShape& exact, const FourierCurve& recovered, int n_t);

struct NoisePoint {
  double sigma = 0.0;
  double mean_dj = 0.0;  // E[J(noisy) - J(clean)] over antithetic pairs
  double std_err = 0.0;  // Monte Carlo standard error of that mean
  bool warned = false;   // std_err exceeds 20% of |mean_dj|
};

struct NoiseStudy {
  std::vector<NoisePoint> points;
  double slope = 0.0;          // least-squares slope of log|mean_dj| vs log sigma
  double slope_se = 0.0;       // standard error of the fitted slope
  double delta_sq_mean = 0.0;  // empirical E[Delta^2]; 1/3 for U(-1,1) draws
  int trials = 0;
};

// Perturbs the measured block entrywise as F (1 + sigma Delta), Delta ~ U(-1,1)
// i.i.d., pushes each draw through the fixed network in eval mode, and
// differences the training objective against the unperturbed value. Each trial
// averages a +Delta/-Delta pair, which cancels the first-order term exactly and
// leaves the quadratic response visible at small sigma. Points with sigma = 0
// are reported (identically zero) but excluded from the log-log fit.
NoiseStudy noise_scaling_study(DdmNetwork& net, const LimitedAperture& data,
                               const Msrm& exact_full, const PhysicsConfig& cfg,
                               const std::vector<double>& sigmas, int trials,
                               std::uint64_t seed);

}  // namespace ddm
