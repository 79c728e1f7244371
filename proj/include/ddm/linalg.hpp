#pragma once

// Dense complex matrices sized for Nystrom systems (a few hundred rows), with
// partially pivoted LU, adjoint solves, and a Hager-style 1-norm condition
// estimate used as the interior-resonance guard.

#include <vector>

#include "ddm/common.hpp"

namespace ddm {

struct CMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Complex> data;  // row-major

  CMatrix() = default;
  CMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

  Complex& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  const Complex& at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  double frobenius() const;
};

double norm1(const CMatrix& a);

class LuFactor {
 public:
  // Factors PA = LU. Throws NumericalError on an exactly singular pivot.
  explicit LuFactor(CMatrix a);

  void solve_in_place(std::vector<Complex>& b) const;          // A x = b
  void solve_adjoint_in_place(std::vector<Complex>& b) const;  // A^H x = b

  // Estimated 1-norm condition number; norm1_a is ||A||_1 of the unfactored matrix.
  double cond1_estimate(double norm1_a) const;

  int size() const { return n_; }

 private:
  int n_ = 0;
  CMatrix lu_;
  std::vector<int> piv_;
};

}  // namespace ddm
