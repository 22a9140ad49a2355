#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "wms/linalg.hpp"
#include "wms/matrix.hpp"
#include "wms/rng.hpp"

using namespace wms;

namespace {

// Plain LCG for reproducible test fixtures; the library RNG is under test
// elsewhere, so the fixtures don't depend on it.
struct FixtureRng {
  std::uint64_t s = 0x853c49e6748fea9bull;
  double next() {  // uniform in [-1, 1]
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return 2.0 * (static_cast<double>(s >> 11) * 0x1.0p-53) - 1.0;
  }
};

Matrix random_matrix(FixtureRng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next();
  return m;
}

double rel_error(const Matrix& got, const Matrix& want) {
  return (got - want).frobenius_norm() / std::max(1e-300, want.frobenius_norm());
}

}  // namespace

TEST_CASE("matrix construction and accessors") {
  Matrix m{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  CHECK(m(2, 1) == 6.0);

  CHECK(Matrix::identity(3)(1, 1) == 1.0);
  CHECK(Matrix::identity(3)(0, 1) == 0.0);
  CHECK(Matrix::diagonal({2.0, 5.0})(1, 1) == 5.0);
  CHECK(Matrix::column({1.0, 2.0, 3.0}).rows() == 3);
  CHECK(Matrix::column({1.0, 2.0, 3.0}).cols() == 1);

  CHECK(Matrix().empty());
  CHECK_FALSE(m.empty());

  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(Matrix({{1.0, 2.0}, {3.0}}), std::invalid_argument);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Matrix(1, 1, {inf}), std::invalid_argument);
}

TEST_CASE("matrix arithmetic") {
  Matrix a{{1.0, 2.0}, {3.0, 4.0}};
  Matrix b{{5.0, 6.0}, {7.0, 8.0}};

  CHECK((a + b) == Matrix{{6.0, 8.0}, {10.0, 12.0}});
  CHECK((b - a) == Matrix{{4.0, 4.0}, {4.0, 4.0}});
  CHECK((-a) == Matrix{{-1.0, -2.0}, {-3.0, -4.0}});
  CHECK((2.0 * a) == Matrix{{2.0, 4.0}, {6.0, 8.0}});
  CHECK((a * 2.0) == Matrix{{2.0, 4.0}, {6.0, 8.0}});
  CHECK((a * b) == Matrix{{19.0, 22.0}, {43.0, 50.0}});
  CHECK(a.transpose() == Matrix{{1.0, 3.0}, {2.0, 4.0}});

  Matrix tall{{1.0}, {2.0}, {3.0}};
  CHECK_THROWS_AS(a + tall, DimensionMismatch);
  CHECK_THROWS_AS(a * tall.transpose() * tall * tall, DimensionMismatch);

  CHECK(a.frobenius_norm() == doctest::Approx(std::sqrt(30.0)));
  CHECK(a.max_abs() == 4.0);
  CHECK(a.is_finite());
}

TEST_CASE("matrix blocks and stacking") {
  Matrix m{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, {7.0, 8.0, 9.0}};
  CHECK(m.block(1, 1, 2, 2) == Matrix{{5.0, 6.0}, {8.0, 9.0}});
  CHECK_THROWS_AS(m.block(2, 2, 2, 2), DimensionMismatch);

  Matrix patched = m;
  patched.set_block(0, 1, Matrix{{-1.0}, {-2.0}});
  CHECK(patched(0, 1) == -1.0);
  CHECK(patched(1, 1) == -2.0);
  CHECK(patched(2, 1) == 8.0);
  CHECK_THROWS_AS(patched.set_block(2, 2, Matrix::identity(2)), DimensionMismatch);

  Matrix left{{1.0}, {2.0}};
  Matrix right{{3.0, 4.0}, {5.0, 6.0}};
  CHECK(Matrix::hstack(left, right) == Matrix{{1.0, 3.0, 4.0}, {2.0, 5.0, 6.0}});
  CHECK(Matrix::vstack(right, right.block(0, 0, 1, 2)) ==
        Matrix{{3.0, 4.0}, {5.0, 6.0}, {3.0, 4.0}});
  CHECK_THROWS_AS(Matrix::hstack(left, right.block(0, 0, 1, 2)), DimensionMismatch);
  CHECK_THROWS_AS(Matrix::vstack(left, right), DimensionMismatch);
}

TEST_CASE("cholesky matches the hand-worked factor") {
  // For [[4,2],[2,3]] the factor is [[2,0],[1,sqrt(2)]]: 2*2=4, 2*1=2,
  // 1+2=3.
  const Matrix l = cholesky(SpdMatrix(Matrix{{4.0, 2.0}, {2.0, 3.0}}));
  CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("indefinite matrices are rejected") {
  // Eigenvalues 3 and -1.
  CHECK_THROWS_AS(SpdMatrix(Matrix{{1.0, 2.0}, {2.0, 1.0}}), NotPositiveSemidefinite);
  CHECK_THROWS_AS(SpdMatrix(Matrix{{-1.0}}), NotPositiveSemidefinite);
  CHECK_THROWS_AS(SpdMatrix(Matrix{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}}), DimensionMismatch);
}

TEST_CASE("cholesky handles semidefinite and zero matrices") {
  const Matrix rank1{{1.0, 1.0}, {1.0, 1.0}};
  const Matrix l = cholesky(SpdMatrix(rank1));
  CHECK(rel_error(l * l.transpose(), rank1) < 1e-12);
  CHECK(l(1, 1) == 0.0);

  const Matrix lz = cholesky(SpdMatrix::zero(3));
  CHECK(lz.frobenius_norm() == 0.0);
}

TEST_CASE("cholesky reconstructs random semidefinite matrices") {
  FixtureRng rng;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 12;
    const Matrix g = random_matrix(rng, n, n);
    const Matrix a = g * g.transpose();
    const Matrix l = cholesky(SpdMatrix(a));
    CHECK((l * l.transpose() - a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
    // lower triangular by construction
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) CHECK(l(i, j) == 0.0);
  }
}

TEST_CASE("spd solve and inverse") {
  const Matrix a{{4.0, 2.0}, {2.0, 3.0}};
  const Matrix x{{1.0, -2.0}, {0.5, 3.0}};
  const Matrix solved = solve_spd(a, a * x);
  CHECK(rel_error(solved, x) < 1e-12);

  const Matrix inv = inverse_spd(a);
  CHECK(rel_error(a * inv, Matrix::identity(2)) < 1e-12);

  CHECK_THROWS_AS(solve_spd(Matrix{{1.0, 1.0}, {1.0, 1.0}}, Matrix::identity(2)),
                  NotPositiveSemidefinite);
  CHECK_THROWS_AS(solve_spd(a, Matrix::identity(3)), DimensionMismatch);
}

TEST_CASE("spd wrapper symmetrizes and exposes entries") {
  const SpdMatrix s(Matrix{{2.0, 1.0 + 1e-13}, {1.0 - 1e-13, 2.0}});
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s.dim() == 2);

  const SpdMatrix joined =
      SpdMatrix::block_diagonal(SpdMatrix::scaled_identity(2, 3.0), SpdMatrix::identity(1));
  CHECK(joined.dim() == 3);
  CHECK(joined(0, 0) == 3.0);
  CHECK(joined(2, 2) == 1.0);
  CHECK(joined(0, 2) == 0.0);
}

TEST_CASE("eigenvalues of small fixed matrices") {
  SUBCASE("diagonal") {
    const auto e = eigenvalues(Matrix::diagonal({0.9, -0.5, 0.1}));
    double big = 0.0;
    for (const auto& v : e) big = std::max(big, std::abs(v));
    CHECK(big == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(e.size() == 3);
  }
  SUBCASE("rotation has complex pair") {
    const double th = 0.7;
    const Matrix rot{{0.9 * std::cos(th), -0.9 * std::sin(th)},
                     {0.9 * std::sin(th), 0.9 * std::cos(th)}};
    const auto e = eigenvalues(rot);
    CHECK(std::abs(e[0]) == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(std::abs(e[1]) == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(std::abs(e[0].imag()) == doctest::Approx(0.9 * std::sin(th)).epsilon(1e-9));
  }
  SUBCASE("defective block keeps its eigenvalue") {
    const Matrix jordan{{0.8, 1.0}, {0.0, 0.8}};
    CHECK(spectral_radius(jordan) == doctest::Approx(0.8).epsilon(1e-7));
  }
  SUBCASE("empty and scalar") {
    CHECK(eigenvalues(Matrix(0, 0)).empty());
    CHECK(eigenvalues(Matrix{{-3.0}})[0].real() == -3.0);
  }
  CHECK_THROWS_AS(eigenvalues(Matrix(2, 3)), DimensionMismatch);
}

TEST_CASE("spectral radius agrees with the matrix-power estimate") {
  // ||A^k||_F^(1/k) upper-bounds the spectral radius and converges to it,
  // which gives an oracle that shares no code with the QR iteration.
  FixtureRng rng;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6;
    Matrix a = random_matrix(rng, n, n);
    a *= 1.0 / a.frobenius_norm();
    Matrix power = a;
    for (int squarings = 0; squarings < 6; ++squarings) power = power * power;  // a^64
    const double estimate = std::pow(power.frobenius_norm(), 1.0 / 64.0);
    const double rho = spectral_radius(a);
    CHECK(rho <= estimate * (1.0 + 1e-9));
    CHECK(estimate <= rho * 1.5);
  }
}

TEST_CASE("schur stability check uses a strict margin") {
  CHECK(is_schur_stable(Matrix::diagonal({0.99, -0.5})));
  CHECK_FALSE(is_schur_stable(Matrix::identity(2)));
  CHECK_FALSE(is_schur_stable(Matrix::diagonal({1.0 - 1e-12})));
}

TEST_CASE("lyapunov solver on closed forms") {
  SUBCASE("nilpotent transition returns the forcing term") {
    const Matrix q{{2.0, 0.5}, {0.5, 1.0}};
    CHECK(rel_error(solve_discrete_lyapunov(Matrix(2, 2), q), q) < 1e-14);
  }
  SUBCASE("scalar geometric series") {
    // sigma = a^2 sigma + q with a = 1/2, q = 1 gives sigma = 4/3.
    const Matrix s = solve_discrete_lyapunov(Matrix{{0.5}}, Matrix{{1.0}});
    CHECK(s(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("unstable transition throws") {
    CHECK_THROWS_AS(solve_discrete_lyapunov(Matrix::identity(2), Matrix::identity(2)),
                    NotConverged);
    CHECK_THROWS_AS(solve_discrete_lyapunov(Matrix::diagonal({1.5}), Matrix{{1.0}}),
                    NotConverged);
  }
  CHECK_THROWS_AS(solve_discrete_lyapunov(Matrix(2, 2), Matrix(3, 3)), DimensionMismatch);
}

TEST_CASE("lyapunov solutions satisfy the fixed-point equation") {
  FixtureRng rng;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 8;
    Matrix a = random_matrix(rng, n, n);
    const double rho = spectral_radius(a);
    if (rho > 0.0) a *= (0.2 + 0.07 * (trial % 10)) / rho;  // spread radii over [0.2, 0.83]
    const Matrix g = random_matrix(rng, n, n);
    const Matrix q = g * g.transpose();
    const Matrix sigma = solve_discrete_lyapunov(a, q);
    const Matrix residual = a * sigma * a.transpose() + q - sigma;
    CHECK(residual.frobenius_norm() <= 1e-10 * std::max(1.0, sigma.frobenius_norm()));
    // solution of a stable Lyapunov equation with PSD forcing is PSD
    CHECK_NOTHROW(SpdMatrix{sigma});
  }
}

TEST_CASE("riccati solution matches the scalar closed form") {
  // For a=2, b=1, q=r=1 the stabilizing root of p = 4p/(1+p) + 1 is
  // p = 2 + sqrt(5), with gain k = -2p/(1+p) and closed loop a + bk =
  // (3 - sqrt(5))/2.
  const Matrix a{{2.0}};
  const Matrix b{{1.0}};
  const SpdMatrix q = SpdMatrix::identity(1);
  const SpdMatrix r = SpdMatrix::identity(1);

  const Matrix p = solve_dare(a, b, q, r);
  const double expected_p = 2.0 + std::sqrt(5.0);
  CHECK(p(0, 0) == doctest::Approx(expected_p).epsilon(1e-9));

  const Matrix k = dlqr_gain(a, b, q, r);
  CHECK(k(0, 0) == doctest::Approx(-2.0 * expected_p / (1.0 + expected_p)).epsilon(1e-9));
  CHECK((a + b * k)(0, 0) == doctest::Approx(0.5 * (3.0 - std::sqrt(5.0))).epsilon(1e-9));
}

TEST_CASE("riccati solutions satisfy their equation on random systems") {
  FixtureRng rng;
  int done = 0;
  while (done < 20) {
    const int n = 1 + done % 5;
    const int m = 1 + done % 2;
    Matrix a = random_matrix(rng, n, n);
    const double rho = spectral_radius(a);
    if (rho > 0.0) a *= 1.2 / rho;  // make the open loop unstable
    const Matrix b = random_matrix(rng, n, m);
    if (numerical_rank(controllability_matrix(a, b)) < n) continue;
    ++done;

    const SpdMatrix q = SpdMatrix::identity(n);
    const SpdMatrix r = SpdMatrix::identity(m);
    const Matrix p = solve_dare(a, b, q, r);
    const Matrix gain = solve_spd(b.transpose() * p * b + r.matrix(), b.transpose() * p * a);
    const Matrix rhs = a.transpose() * p * (a - b * gain) + q.matrix();
    CHECK(rel_error(p, rhs) < 1e-9);

    const Matrix k = dlqr_gain(a, b, q, r);
    CHECK(spectral_radius(a + b * k) < 1.0 - 1e-9);
  }
}

TEST_CASE("observer gains stabilize the error dynamics") {
  FixtureRng rng;
  int done = 0;
  while (done < 20) {
    const int n = 1 + done % 5;
    const int m = 1 + done % 2;
    Matrix a = random_matrix(rng, n, n);
    const double rho = spectral_radius(a);
    if (rho > 0.0) a *= 1.2 / rho;
    const Matrix c = random_matrix(rng, m, n);
    if (numerical_rank(observability_matrix(a, c)) < n) continue;
    ++done;

    const Matrix l = kalman_gain(a, c, SpdMatrix::identity(n), SpdMatrix::identity(m));
    CHECK(spectral_radius(a + l * c) < 1.0 - 1e-9);
  }
}

TEST_CASE("uncontrollable unstable modes are reported") {
  const Matrix a = Matrix::diagonal({2.0, 2.0});
  const Matrix b{{1.0}, {0.0}};
  CHECK_THROWS_AS(solve_dare(a, b, SpdMatrix::identity(2), SpdMatrix::identity(1)),
                  NotStabilizable);
}

TEST_CASE("unobservable unstable modes are reported") {
  const Matrix a = Matrix::diagonal({2.0, 2.0});
  const Matrix c{{1.0, 0.0}};
  CHECK_THROWS_AS(kalman_gain(a, c, SpdMatrix::identity(2), SpdMatrix::identity(1)),
                  NotDetectable);
}

TEST_CASE("numerical rank") {
  CHECK(numerical_rank(Matrix::identity(3)) == 3);
  CHECK(numerical_rank(Matrix{{1.0, 2.0}, {2.0, 4.0}}) == 1);
  CHECK(numerical_rank(Matrix(2, 2)) == 0);
  CHECK(numerical_rank(Matrix{{1e-12, 0.0}, {0.0, 1.0}}) == 1);
  CHECK(numerical_rank(Matrix{{0.0, 1.0}, {1.0, 1.0}}) == 2);

  // double-integrator pair: controllable, first output sees only position
  const Matrix a{{1.0, 1.0}, {0.0, 1.0}};
  const Matrix b{{0.0}, {1.0}};
  const Matrix c{{1.0, 0.0}};
  CHECK(numerical_rank(controllability_matrix(a, b)) == 2);
  CHECK(numerical_rank(observability_matrix(a, c)) == 2);
  CHECK(numerical_rank(c * b) == 0);
  CHECK(numerical_rank(c * a * b) == 1);
}

TEST_CASE("stacked system power identities hold for gain design output") {
  // Closed-loop design on the double integrator; downstream modules lean on
  // these gains heavily, so pin their defining properties here.
  const Matrix a{{1.0, 1.0}, {0.0, 1.0}};
  const Matrix b{{0.0}, {1.0}};
  const Matrix c{{1.0, 0.0}};
  const Matrix k = dlqr_gain(a, b, SpdMatrix::identity(2), SpdMatrix::identity(1));
  const Matrix l = kalman_gain(a, c, SpdMatrix::scaled_identity(2, 1e-4),
                               SpdMatrix::scaled_identity(1, 1e-4));
  CHECK(is_schur_stable(a + b * k));
  CHECK(is_schur_stable(a + l * c));
  CHECK(is_schur_stable(a + b * k + l * c));
}
