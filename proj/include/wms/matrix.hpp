#pragma once

#include <initializer_list>
#include <vector>

#include "wms/errors.hpp"

namespace wms {

// Dense row-major matrix of doubles. Every system handled here has a dozen
// states or fewer, so the implementation favors plain loops and value
// semantics over any kind of cleverness.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(int n);
  static Matrix diagonal(const std::vector<double>& entries);
  static Matrix column(const std::vector<double>& entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const;
  Matrix block(int row0, int col0, int nrows, int ncols) const;
  void set_block(int row0, int col0, const Matrix& m);

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  double frobenius_norm() const;
  double max_abs() const;
  bool is_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b);

  static Matrix hstack(const Matrix& left, const Matrix& right);
  static Matrix vstack(const Matrix& top, const Matrix& bottom);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(const Matrix& a);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);

// Symmetric positive semidefinite matrix. The constructor symmetrizes its
// input as (M + M')/2 and verifies semidefiniteness with a pivot-tolerant
// Cholesky; genuinely indefinite inputs throw NotPositiveSemidefinite.
class SpdMatrix {
 public:
  // Default is the empty 0x0 matrix, the "not set yet" state of model
  // structs that are filled field by field.
  SpdMatrix() = default;
  explicit SpdMatrix(const Matrix& m);

  static SpdMatrix identity(int n);
  static SpdMatrix scaled_identity(int n, double scale);
  static SpdMatrix zero(int n);
  static SpdMatrix block_diagonal(const SpdMatrix& a, const SpdMatrix& b);

  int dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

// Lower-triangular L with L L' = m. Pivots are compared against
// 1e-10 x (largest diagonal entry): a pivot below the tolerance zeroes its
// column (semidefinite directions), one below minus the tolerance throws
// NotPositiveSemidefinite.
Matrix cholesky(const SpdMatrix& m);

// Solve a x = rhs for strictly positive definite a via Cholesky. A pivot at
// or below the tolerance throws NotPositiveSemidefinite.
Matrix solve_spd(const Matrix& a, const Matrix& rhs);
Matrix inverse_spd(const Matrix& a);

}  // namespace wms
