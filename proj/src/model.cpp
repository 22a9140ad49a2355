#include "wms/model.hpp"

#include <cmath>

namespace wms {

void validate_plant(const PlantModel& plant) {
  const int p = plant.a.rows();
  if (plant.a.cols() != p) throw DimensionMismatch("plant transition matrix must be square");
  if (plant.b.rows() != p) throw DimensionMismatch("input map row count must match the state");
  if (plant.c.cols() != p)
    throw DimensionMismatch("output map column count must match the state");
  if (plant.sigma_w.dim() != p)
    throw DimensionMismatch("process noise covariance must match the state dimension");
  if (plant.sigma_z.dim() != plant.c.rows())
    throw DimensionMismatch("measurement noise covariance must match the output dimension");
  if (p == 0 || plant.b.cols() == 0 || plant.c.rows() == 0)
    throw DimensionMismatch("plant dimensions must be positive");
}

SpdMatrix ClosedLoopModel::residual_covariance() const {
  return SpdMatrix(plant.c * sigma_delta.matrix() * plant.c.transpose() +
                   plant.sigma_z.matrix());
}

std::optional<int> compute_kprime(const Matrix& a, const Matrix& b, const Matrix& c,
                                  const Matrix& k_gain) {
  const int p = a.rows();
  if (a.cols() != p || b.rows() != p || c.cols() != p || k_gain.rows() != b.cols() ||
      k_gain.cols() != p)
    throw DimensionMismatch("kprime inputs are dimensionally inconsistent");

  const Matrix closed = a + b * k_gain;
  const double scale = c.frobenius_norm() * b.frobenius_norm();
  const double closed_norm = closed.frobenius_norm();

  Matrix power = b;  // closed^k b
  double norm_pow = 1.0;
  for (int k = 0; k < p; ++k) {
    if ((c * power).max_abs() > 1e-9 * (1.0 + scale * norm_pow)) return k;
    power = closed * power;
    norm_pow *= closed_norm;
  }
  return std::nullopt;
}

ClosedLoopModel assemble_closed_loop(const PlantModel& plant, const Matrix& k_gain,
                                     const Matrix& l_gain, const SpdMatrix& sigma_e) {
  validate_plant(plant);
  const int p = plant.p();
  const int q = plant.q();
  const int m = plant.m();
  if (k_gain.rows() != q || k_gain.cols() != p)
    throw DimensionMismatch("feedback gain must be q x p");
  if (l_gain.rows() != p || l_gain.cols() != m)
    throw DimensionMismatch("observer gain must be p x m");
  if (sigma_e.dim() != q)
    throw DimensionMismatch("watermark covariance must match the input dimension");

  const Matrix bk = plant.b * k_gain;
  const Matrix lc = l_gain * plant.c;
  const Matrix closed = plant.a + bk;
  const Matrix observer = plant.a + lc;
  if (!is_schur_stable(closed))
    throw UnstableClosedLoop("a + b k is not Schur stable");
  if (!is_schur_stable(observer))
    throw UnstableClosedLoop("a + l c is not Schur stable");

  // The statistical test needs sigma_e^{-1}, so semidefinite is not enough.
  try {
    (void)inverse_spd(sigma_e.matrix());
  } catch (const NotPositiveSemidefinite&) {
    throw SingularExcitation("watermark covariance must be strictly positive definite");
  }

  const auto kprime = compute_kprime(plant.a, plant.b, plant.c, k_gain);
  if (!kprime)
    throw NoWatermarkPath("the watermark never reaches the output through this loop");

  // stacked [x; xhat] dynamics
  Matrix a_under(2 * p, 2 * p);
  a_under.set_block(0, 0, plant.a);
  a_under.set_block(0, p, bk);
  a_under.set_block(p, 0, -lc);
  a_under.set_block(p, p, closed + lc);

  const Matrix b_under = Matrix::vstack(plant.b, plant.b);
  const Matrix d_under = Matrix::vstack(Matrix::identity(p), Matrix(p, p));

  Matrix l_under(2 * p, m);
  l_under.set_block(p, 0, -l_gain);

  Matrix h_under(2 * p, 2 * p);
  h_under.set_block(p, 0, -lc);

  // transformed [x; delta] dynamics
  Matrix a_dunder(2 * p, 2 * p);
  a_dunder.set_block(0, 0, closed);
  a_dunder.set_block(0, p, bk);
  a_dunder.set_block(p, p, observer);

  const Matrix c_dunder = Matrix::hstack(-plant.c, plant.c);

  Matrix m_dunder(p, 2 * p);
  m_dunder.set_block(0, p, Matrix::identity(p));

  // noise injection maps for the [x; delta] coordinates
  const Matrix b_hat = Matrix::vstack(plant.b, Matrix(p, q));
  const Matrix d_hat = Matrix::vstack(Matrix::identity(p), -Matrix::identity(p));
  Matrix l_hat(2 * p, m);
  l_hat.set_block(p, 0, -l_gain);

  const Matrix forcing = b_hat * sigma_e.matrix() * b_hat.transpose() +
                         d_hat * plant.sigma_w.matrix() * d_hat.transpose() +
                         l_hat * plant.sigma_z.matrix() * l_hat.transpose();
  const Matrix sigma_x = solve_discrete_lyapunov(a_dunder, forcing);

  const Matrix delta_forcing = plant.sigma_w.matrix() +
                               l_gain * plant.sigma_z.matrix() * l_gain.transpose();
  const Matrix sigma_delta = solve_discrete_lyapunov(observer, delta_forcing);

  return ClosedLoopModel{plant,
                         k_gain,
                         l_gain,
                         sigma_e,
                         a_under,
                         b_under,
                         d_under,
                         l_under,
                         h_under,
                         a_dunder,
                         c_dunder,
                         m_dunder,
                         *kprime,
                         SpdMatrix(sigma_x),
                         SpdMatrix(sigma_delta)};
}

namespace {

// Any lag of interest sits within a few multiples of the state dimension;
// the fixed cap exists to catch a horizon passed by mistake, not to bound
// legitimate use.
constexpr int kMaxInputMapPower = 64;

Matrix repeated_product(const Matrix& transition, const Matrix& input, int power) {
  if (power < 0 || power > kMaxInputMapPower)
    throw OutOfRange("requested power is outside the supported range");
  Matrix result = input;
  for (int i = 0; i < power; ++i) result = transition * result;
  return result;
}

}  // namespace

Matrix powered_input_map(const ClosedLoopModel& model, int r) {
  return repeated_product(model.a_under, model.b_under, r);
}

Matrix attacked_input_map(const ClosedLoopModel& model, double alpha, int k) {
  return repeated_product(model.tampered_a(alpha), model.b_under, k);
}

}  // namespace wms
