#include "randchan/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace randchan::linalg {

RationalMatrix RationalMatrix::transpose() const {
  RationalMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<Rational> RationalMatrix::apply(const std::vector<Rational>& v) const {
  if (static_cast<int>(v.size()) != cols_)
    throw std::invalid_argument("RationalMatrix::apply: dimension mismatch");
  std::vector<Rational> out(static_cast<size_t>(rows_));
  for (int i = 0; i < rows_; ++i) {
    Rational acc = 0;
    for (int j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[static_cast<size_t>(j)];
    out[static_cast<size_t>(i)] = acc;
  }
  return out;
}

Matrix RationalMatrix::to_double() const {
  Matrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = exactmath::to_double((*this)(i, j));
  return m;
}

int rank(const Matrix& m, double tol) {
  if (tol < 0) throw std::invalid_argument("rank requires tol >= 0");
  if (m.size() == 0) return 0;
  Matrix a = m;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double threshold = tol * scale;
  const Eigen::Index rows = a.rows(), cols = a.cols();
  int r = 0;
  for (Eigen::Index col = 0; col < cols && r < rows; ++col) {
    Eigen::Index pivot_row;
    const double pivot = a.col(col).tail(rows - r).cwiseAbs().maxCoeff(&pivot_row);
    pivot_row += r;
    if (!(pivot > threshold)) continue;
    a.row(pivot_row).swap(a.row(r));
    for (Eigen::Index i = r + 1; i < rows; ++i) {
      const double f = a(i, col) / a(r, col);
      a.row(i).tail(cols - col) -= f * a.row(r).tail(cols - col);
    }
    ++r;
  }
  return r;
}

int rank(const RationalMatrix& m) {
  RationalMatrix a = m;
  const int rows = a.rows(), cols = a.cols();
  int r = 0;
  for (int col = 0; col < cols && r < rows; ++col) {
    int pivot_row = -1;
    for (int i = r; i < rows; ++i) {
      if (a(i, col) != 0) {
        pivot_row = i;
        break;
      }
    }
    if (pivot_row < 0) continue;
    if (pivot_row != r)
      for (int j = col; j < cols; ++j) std::swap(a(pivot_row, j), a(r, j));
    for (int i = r + 1; i < rows; ++i) {
      if (a(i, col) == 0) continue;
      const Rational f = a(i, col) / a(r, col);
      for (int j = col; j < cols; ++j) a(i, j) -= f * a(r, j);
    }
    ++r;
  }
  return r;
}

Vector krylov_column(const Matrix& a, const Vector& v, int power) {
  if (a.rows() != a.cols()) throw std::invalid_argument("krylov_column requires square A");
  if (a.cols() != v.size()) throw std::invalid_argument("krylov_column: dimension mismatch");
  if (power < 0) throw std::invalid_argument("krylov_column requires power >= 0");
  Vector x = v;
  for (int i = 0; i < power; ++i) x = a * x;
  return x;
}

Vector solve_min_norm(const Matrix& m, const Vector& y, double tol) {
  if (m.rows() != y.size()) throw std::invalid_argument("solve_min_norm: dimension mismatch");
  if (m.size() == 0) return Vector::Zero(m.cols());

  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double threshold = tol * scale;

  // |R| diagonal is nonincreasing under column pivoting, so the rank is the
  // length of the leading run of acceptable pivots.
  const Eigen::Index max_rank = std::min(m.rows(), m.cols());
  Eigen::Index r = 0;
  while (r < max_rank && std::abs(qr.matrixR()(r, r)) > threshold) ++r;
  if (r == 0) return Vector::Zero(m.cols());

  const Vector c = (qr.householderQ().transpose() * y).head(r);
  const Matrix top = qr.matrixR().topRows(r).triangularView<Eigen::Upper>();

  // top^T = Z T with Z orthonormal; min-norm w solving top * w = c is
  // Z * (T^T)^{-1} c, and undoing the column permutation gives z.
  Eigen::HouseholderQR<Matrix> qr2(top.transpose());
  const Matrix t = qr2.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  const Vector mid = t.transpose().triangularView<Eigen::Lower>().solve(c);
  Vector w = Vector::Zero(m.cols());
  w.head(r) = mid;
  w = qr2.householderQ() * w;
  return qr.colsPermutation() * w;
}

}  // namespace randchan::linalg
