#include "wms/matrix.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace wms {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DimensionMismatch(what);
}

void require_finite(const std::vector<double>& entries) {
  for (double v : entries) {
    if (!std::isfinite(v)) throw std::invalid_argument("matrix entries must be finite");
  }
}

// Shared factorization core. When strict is set every pivot must clear the
// tolerance; otherwise small pivots zero their column.
Matrix cholesky_core(const Matrix& a, bool strict) {
  const int n = a.rows();
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double tol = 1e-10 * max_diag;

  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (int k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < -tol) throw NotPositiveSemidefinite("negative pivot in Cholesky factorization");
    if (pivot <= tol) {
      if (strict) throw NotPositiveSemidefinite("singular pivot in Cholesky factorization");
      continue;  // leave column j zero
    }
    const double root = std::sqrt(pivot);
    l(j, j) = root;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / root;
    }
  }
  return l;
}

}  // namespace

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("matrix dimensions must be nonnegative");
}

Matrix::Matrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("entry count does not match dimensions");
  require_finite(data_);
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
  data_.reserve(static_cast<size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_)
      throw std::invalid_argument("ragged initializer for matrix");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require_finite(data_);
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const std::vector<double>& entries) {
  Matrix m(static_cast<int>(entries.size()), static_cast<int>(entries.size()));
  for (size_t i = 0; i < entries.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = entries[i];
  return m;
}

Matrix Matrix::column(const std::vector<double>& entries) {
  return Matrix(static_cast<int>(entries.size()), 1, entries);
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(int row0, int col0, int nrows, int ncols) const {
  if (row0 < 0 || col0 < 0 || row0 + nrows > rows_ || col0 + ncols > cols_)
    throw DimensionMismatch("block exceeds matrix bounds");
  Matrix b(nrows, ncols);
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < ncols; ++j) b(i, j) = (*this)(row0 + i, col0 + j);
  return b;
}

void Matrix::set_block(int row0, int col0, const Matrix& m) {
  if (row0 < 0 || col0 < 0 || row0 + m.rows() > rows_ || col0 + m.cols() > cols_)
    throw DimensionMismatch("block exceeds matrix bounds");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) (*this)(row0 + i, col0 + j) = m(i, j);
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "matrix sum shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "matrix difference shape mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double s = 0.0;
  for (double v : data_) s = std::max(s, std::abs(v));
  return s;
}

bool Matrix::is_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

Matrix Matrix::hstack(const Matrix& left, const Matrix& right) {
  require(left.rows() == right.rows(), "hstack row mismatch");
  Matrix m(left.rows(), left.cols() + right.cols());
  m.set_block(0, 0, left);
  m.set_block(0, left.cols(), right);
  return m;
}

Matrix Matrix::vstack(const Matrix& top, const Matrix& bottom) {
  require(top.cols() == bottom.cols(), "vstack column mismatch");
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m.set_block(0, 0, top);
  m.set_block(top.rows(), 0, bottom);
  return m;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

Matrix operator-(const Matrix& a) {
  Matrix m = a;
  return m *= -1.0;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product shape mismatch");
  Matrix m(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) m(i, j) += aik * b(k, j);
    }
  }
  return m;
}

Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

SpdMatrix::SpdMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("covariance matrix must be square");
  Matrix sym = m;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) sym(i, j) = 0.5 * (m(i, j) + m(j, i));
  cholesky_core(sym, /*strict=*/false);  // validates semidefiniteness
  m_ = std::move(sym);
}

SpdMatrix SpdMatrix::identity(int n) { return SpdMatrix(Matrix::identity(n)); }

SpdMatrix SpdMatrix::scaled_identity(int n, double scale) {
  return SpdMatrix(Matrix::identity(n) * scale);
}

SpdMatrix SpdMatrix::zero(int n) { return SpdMatrix(Matrix(n, n)); }

SpdMatrix SpdMatrix::block_diagonal(const SpdMatrix& a, const SpdMatrix& b) {
  Matrix m(a.dim() + b.dim(), a.dim() + b.dim());
  m.set_block(0, 0, a.matrix());
  m.set_block(a.dim(), a.dim(), b.matrix());
  return SpdMatrix(m);
}

Matrix cholesky(const SpdMatrix& m) { return cholesky_core(m.matrix(), /*strict=*/false); }

Matrix solve_spd(const Matrix& a, const Matrix& rhs) {
  if (a.rows() != a.cols() || a.rows() != rhs.rows())
    throw DimensionMismatch("solve_spd shape mismatch");
  const Matrix l = cholesky_core(a, /*strict=*/true);
  const int n = a.rows();
  Matrix x = rhs;
  // forward substitution L w = rhs
  for (int col = 0; col < x.cols(); ++col) {
    for (int i = 0; i < n; ++i) {
      double s = x(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i);
    }
    // back substitution L' x = w
    for (int i = n - 1; i >= 0; --i) {
      double s = x(i, col);
      for (int k = i + 1; k < n; ++k) s -= l(k, i) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

Matrix inverse_spd(const Matrix& a) { return solve_spd(a, Matrix::identity(a.rows())); }

}  // namespace wms
