#pragma once

#include <vector>

#include <Eigen/Dense>

#include "randchan/exactmath.hpp"

namespace randchan::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using exactmath::Rational;

inline constexpr double kDefaultTol = 1e-9;

// Dense matrix with exact rational entries, for certification runs where a
// floating-point rank would only be evidence.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols) {}

  static RationalMatrix identity(int n) {
    RationalMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Rational& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  const Rational& operator()(int i, int j) const {
    return data_[static_cast<size_t>(i) * cols_ + j];
  }

  RationalMatrix transpose() const;
  std::vector<Rational> apply(const std::vector<Rational>& v) const;  // this * v
  Matrix to_double() const;

  bool operator==(const RationalMatrix& other) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> data_;
};

// Numerical rank by row reduction with partial pivoting.  A pivot is accepted
// iff |pivot| > tol * max(1, largest entry magnitude of the input matrix).
int rank(const Matrix& m, double tol);

// Exact rank of a rational matrix (no tolerance involved).
int rank(const RationalMatrix& m);

// A^power * v without forming A^power.
Vector krylov_column(const Matrix& a, const Vector& v, int power);

// Minimum-norm solution of the least-squares problem min |m z - y|, via a
// complete orthogonal decomposition: column-pivoted QR of m determines the
// rank (same pivot rule as rank()), a second QR of the leading rows'
// transpose compresses them, and the min-norm solution drops out of two
// triangular solves.
Vector solve_min_norm(const Matrix& m, const Vector& y, double tol);

}  // namespace randchan::linalg
