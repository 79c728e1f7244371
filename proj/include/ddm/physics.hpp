#pragma once

// Differentiable physics layer: Herglotz superposition, far-field operator
// application, point-source fields, and the loss functionals built from them.
// Every op here is a fused tape node with a hand-derived backward pass, so
// gradients flow from the losses into network outputs and curve coefficients.

#include <vector>

#include "ddm/common.hpp"
#include "ddm/forward.hpp"
#include "ddm/tensor.hpp"

namespace ddm {

struct SourcePoint {
  Vec2 z{0.0, 0.0};
};

struct LossWeights {
  double alpha = 1e-8;   // exterior-curve regularization
  double gamma = 1.0;    // boundary-condition term
  double beta_dc = 10.0; // data-completion term inside the joint loss
};

struct PhysicsConfig {
  double k = 3.0;
  int m = 16;                  // directions per half circle; matrices are 2m x 2m
  int n_t = 64;                // boundary quadrature nodes for the constraint terms
  double s = 1.0;              // Fourier decay exponent of the curve representation
  double outer_scale = 1.001;  // radial factor for the exterior collocation curve
  SourcePoint source;
  LossWeights weights;
};

// Fundamental solution (i/4) H0(k|x-z|) and its far-field pattern.
Complex phi_fundamental(Vec2 x, const SourcePoint& z, double k);
Complex phi_farfield(Vec2 xhat, const SourcePoint& z, double k);

// Differentiable building blocks. Points tensors are [b, n_t, 2]; complex
// vectors are interleaved (re, im) pairs: g is [b, 4m] covering all 2m
// directions. Direction index ranges are 1-based inclusive.

// Radial curve r(t) = radial_scale * exp(q(t)) sampled on the uniform grid
// t_l = 2*pi*l/n_t from packed coefficients [b, 2*n_lambda+1].
nn::Tensor curve_points(nn::Tensor q_coeffs, double s, int n_t, double radial_scale);

// (pi/m) * sum over directions i in [i_lo, i_hi] of exp(i k x . d_i) g_i.
nn::Tensor herglotz_field(nn::Tensor points, nn::Tensor g, double k, int m, int i_lo, int i_hi);

// (pi/m) * F g for every observation direction; f_pred is [b, 2, 2m, 2m]
// with channel 0 = real part, channel 1 = imaginary part. Result [b, 2m, 2].
nn::Tensor far_operator_apply(nn::Tensor f_pred, nn::Tensor g, int m);

// Same contraction against a measured limited-aperture block (constant, batch
// size must be 1). Rows span the observation range, the inner sum spans the
// incidence range of the data. Result [1, obs_count, 2].
nn::Tensor far_apply_measured(const LimitedAperture& data, nn::Tensor g);

// phi(x_l, z) at every point; backward differentiates through the points.
nn::Tensor phi_at_points(nn::Tensor points, const SourcePoint& z, double k);

// Loss functionals, one value per batch element -> [b].
nn::Tensor j_dc(nn::Tensor f_pred, nn::Tensor f_exact, int m);
nn::Tensor j_phy(nn::Tensor f_pred, nn::Tensor g, nn::Tensor q_coeffs, const PhysicsConfig& cfg);
nn::Tensor j_ddm(nn::Tensor f_pred, nn::Tensor f_exact, nn::Tensor g, nn::Tensor q_coeffs,
                 const PhysicsConfig& cfg);

// Classical objective on one measured sample: the same three physics terms
// with all direction sums restricted to the data's aperture.
nn::Tensor j_cdm(const LimitedAperture& data, nn::Tensor g, nn::Tensor q_coeffs,
                 const PhysicsConfig& cfg);

// Flat value/gradient wrapper around j_cdm for quasi-Newton descent. Layout
// of x: 4m interleaved Herglotz coefficients, then 2*n_lambda+1 curve
// coefficients. grad is resized to x.size().
double cdm_objective(const std::vector<double>& x, std::vector<double>& grad,
                     const LimitedAperture& data, const PhysicsConfig& cfg, int n_lambda);

}  // namespace ddm
