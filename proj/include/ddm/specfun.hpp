#pragma once

// Cylinder functions J_n, Y_n and the outgoing Hankel function H^(1)_n for
// real argument and integer order 0..60. These sit under every kernel in the
// scattering stack, so accuracy targets are tight: |rel err| <= 1e-12 for J,
// <= 1e-10 for Y over x in (0, 40].

#include "ddm/common.hpp"

namespace ddm {

inline constexpr int specfun_max_order = 60;

// J_n(x) for n in [0, 60], x >= 0.
double bessel_j(int n, double x);

// Y_n(x) for n in [0, 60], x > 0. Throws NumericalError at x <= 0.
double bessel_y(int n, double x);

// H^(1)_n(x) = J_n(x) + i Y_n(x), x > 0.
Complex hankel1(int n, double x);

}  // namespace ddm
