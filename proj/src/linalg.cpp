#include "ddm/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace ddm {

double CMatrix::frobenius() const {
  double s = 0.0;
  for (const Complex& v : data) s += std::norm(v);
  return std::sqrt(s);
}

double norm1(const CMatrix& a) {
  double best = 0.0;
  for (int j = 0; j < a.cols; ++j) {
    double col = 0.0;
    for (int i = 0; i < a.rows; ++i) col += std::abs(a.at(i, j));
    best = std::max(best, col);
  }
  return best;
}

LuFactor::LuFactor(CMatrix a) : n_(a.rows), lu_(std::move(a)), piv_(n_) {
  if (lu_.rows != lu_.cols) throw NumericalError("LU needs a square matrix");
  for (int k = 0; k < n_; ++k) {
    int p = k;
    double best = std::abs(lu_.at(k, k));
    for (int i = k + 1; i < n_; ++i) {
      double v = std::abs(lu_.at(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw NumericalError("singular system matrix in LU factorization");
    piv_[k] = p;
    if (p != k)
      for (int j = 0; j < n_; ++j) std::swap(lu_.at(k, j), lu_.at(p, j));
    const Complex pivot = lu_.at(k, k);
    for (int i = k + 1; i < n_; ++i) {
      Complex f = lu_.at(i, k) / pivot;
      lu_.at(i, k) = f;
      if (f != Complex(0.0, 0.0))
        for (int j = k + 1; j < n_; ++j) lu_.at(i, j) -= f * lu_.at(k, j);
    }
  }
}

void LuFactor::solve_in_place(std::vector<Complex>& b) const {
  if (static_cast<int>(b.size()) != n_) throw NumericalError("LU solve: size mismatch");
  for (int k = 0; k < n_; ++k)
    if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
  for (int i = 1; i < n_; ++i) {
    Complex s = b[i];
    for (int j = 0; j < i; ++j) s -= lu_.at(i, j) * b[j];
    b[i] = s;
  }
  for (int i = n_ - 1; i >= 0; --i) {
    Complex s = b[i];
    for (int j = i + 1; j < n_; ++j) s -= lu_.at(i, j) * b[j];
    b[i] = s / lu_.at(i, i);
  }
}

void LuFactor::solve_adjoint_in_place(std::vector<Complex>& b) const {
  if (static_cast<int>(b.size()) != n_) throw NumericalError("LU adjoint solve: size mismatch");
  // A^H = U^H L^H P, so solve U^H v = b, L^H u = v, then undo the pivots.
  for (int i = 0; i < n_; ++i) {
    Complex s = b[i];
    for (int j = 0; j < i; ++j) s -= std::conj(lu_.at(j, i)) * b[j];
    b[i] = s / std::conj(lu_.at(i, i));
  }
  for (int i = n_ - 1; i >= 0; --i) {
    Complex s = b[i];
    for (int j = i + 1; j < n_; ++j) s -= std::conj(lu_.at(j, i)) * b[j];
    b[i] = s;
  }
  for (int k = n_ - 1; k >= 0; --k)
    if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
}

double LuFactor::cond1_estimate(double norm1_a) const {
  // Hager's estimator for ||A^{-1}||_1 via a few solves with A and A^H.
  std::vector<Complex> x(n_, Complex(1.0 / n_, 0.0));
  double est = 0.0;
  int last_j = -1;
  for (int iter = 0; iter < 5; ++iter) {
    std::vector<Complex> y = x;
    solve_in_place(y);
    double y1 = 0.0;
    for (const Complex& v : y) y1 += std::abs(v);
    est = std::max(est, y1);
    std::vector<Complex> xi(n_);
    for (int i = 0; i < n_; ++i) {
      double m = std::abs(y[i]);
      xi[i] = (m > 0.0) ? y[i] / m : Complex(1.0, 0.0);
    }
    solve_adjoint_in_place(xi);
    int j = 0;
    double zmax = 0.0;
    for (int i = 0; i < n_; ++i) {
      double m = std::abs(xi[i]);
      if (m > zmax) {
        zmax = m;
        j = i;
      }
    }
    Complex zx(0.0, 0.0);
    for (int i = 0; i < n_; ++i) zx += std::conj(xi[i]) * x[i];
    if (zmax <= std::abs(zx) || j == last_j) break;
    std::fill(x.begin(), x.end(), Complex(0.0, 0.0));
    x[j] = Complex(1.0, 0.0);
    last_j = j;
  }
  return est * norm1_a;
}

}  // namespace ddm
