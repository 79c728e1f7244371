#pragma once

// Sound-soft exterior Helmholtz solver. The scattered field is represented by
// a single-layer potential whose density solves a boundary integral equation;
// the log singularity of the kernel is handled by the Kress/Martensen-Kussmaul
// splitting with trigonometric quadrature weights, so convergence is spectral
// on analytic boundaries. A combined-field variant (single + i*eta*double
// layer, eta = k) is available for wavenumbers near interior resonances.

#include <utility>
#include <vector>

#include "ddm/common.hpp"
#include "ddm/geometry.hpp"
#include "ddm/linalg.hpp"
#include "ddm/rng.hpp"

namespace ddm {

struct SolverOptions {
  int n_q = 128;               // quadrature nodes, must be even
  bool combined_field = false; // Brakhage-Werner style layer combination
  double cond_limit = 1e12;    // near-resonance guard on the system matrix
};

struct NystromSystem {
  int n_q = 0;
  double k = 0.0;
  std::vector<Vec2> nodes;
  std::vector<Vec2> tangents;
  CMatrix matrix;
};

// Full 2m x 2m far-field matrix on the uniform direction grid
// tau_i = (i-1) pi / m; entry (j,i) = u_inf(xhat_j, d_i).
struct Msrm {
  int m = 0;
  CMatrix entries;
};

// Contiguous sub-block of an Msrm with 1-based inclusive index bounds.
struct LimitedAperture {
  int m = 0;
  int n_obs = 1, big_n_obs = 0;  // rows  [n_obs, big_n_obs]
  int n_inc = 1, big_n_inc = 0;  // cols  [n_inc, big_n_inc]
  CMatrix entries;

  int obs_count() const { return big_n_obs - n_obs + 1; }
  int inc_count() const { return big_n_inc - n_inc + 1; }
  bool full() const { return obs_count() == 2 * m && inc_count() == 2 * m; }
};

// Arc endpoints stored as multiples of pi, e.g. {0, 0.5} is [0, pi/2].
struct ApertureArc {
  double lo_pi = 0.0;
  double hi_pi = 2.0;
};

// Index bounds {n, N} for an arc: n = lo*m/pi + 1, N = hi*m/pi, matching the
// worked instances phi=[0,pi] -> (1, m) and psi=[pi/2,3pi/2] -> (m/2+1, 3m/2).
// Throws ConfigError when the endpoints miss the tau grid.
std::pair<int, int> aperture_indices(const ApertureArc& arc, int m);

double direction_angle(int m, int i);  // tau_i, 1-based
Vec2 direction(int m, int i);

NystromSystem assemble_nystrom(const ParametricShape& shape, double k,
                               const SolverOptions& opt = {});

// Factors the BIE matrix once and reuses it across incident directions.
class FarFieldSolver {
 public:
  FarFieldSolver(const ParametricShape& shape, double k, SolverOptions opt = {});

  // u_inf at the requested observation angles for incident direction d.
  std::vector<Complex> far_field(const Vec2& d, const std::vector<double>& obs_angles) const;

  double condition_estimate() const { return cond_; }
  const NystromSystem& system() const { return sys_; }

 private:
  std::vector<Complex> density(const Vec2& d) const;

  NystromSystem sys_;
  SolverOptions opt_;
  LuFactor lu_;
  double cond_ = 0.0;
};

std::vector<Complex> solve_far_field(const ParametricShape& shape, double k, const Vec2& d,
                                     const std::vector<double>& obs_angles,
                                     const SolverOptions& opt = {});

Msrm assemble_msrm(const ParametricShape& shape, double k, int m, const SolverOptions& opt = {});

LimitedAperture extract_limited(const Msrm& msrm, const ApertureArc& phi, const ApertureArc& psi);

// Multiplicative noise entry * (1 + sigma * Delta), Delta ~ U(-1,1) i.i.d.
// per entry in row-major order.
LimitedAperture add_noise(const LimitedAperture& data, double sigma, StableRng& rng);

// Relative Frobenius mismatch between F and its direction-reversed transpose
// image (j,i) -> (i+m, j+m) mod 2m; zero for exact reciprocal data.
double reciprocity_residual(const Msrm& msrm);

// Analytic sound-soft disk far field by the Fourier-Bessel series,
// u_inf = -e^{-i pi/4} sqrt(2/(pi k)) [J0(ka)/H0(ka)
//         + 2 sum_n (Jn(ka)/Hn(ka)) cos(n(theta_obs - theta_inc))],
// truncated at |n| <= 30. Independent of the integral-equation path.
Complex disk_farfield(double k, double radius, double theta_obs, double theta_inc);

}  // namespace ddm
