#pragma once

// ---------------------------------------------------------------------------
// Dense linear-algebra routines for small state-space models: eigenvalues,
// discrete Lyapunov and Riccati solvers, and the LQR / observer gain design
// built on top of them. Everything here targets matrices of modest size
// (tens of rows), favoring predictable, deterministic behavior over raw
// speed.
// ---------------------------------------------------------------------------

#include <complex>
#include <vector>

#include "wms/matrix.hpp"

namespace wms {

// All eigenvalues of a square real matrix, in no particular order.
// Reduces to Hessenberg form and runs a shifted complex QR iteration;
// throws NoConvergence if the iteration fails to deflate.
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& a);

// True when every eigenvalue lies strictly inside the unit circle,
// with a 1e-9 safety margin on the boundary.
bool is_schur_stable(const Matrix& a);

// Solution of sigma = a * sigma * a' + q for Schur-stable a, via the
// doubling iteration. Throws NotConverged when a is not stable enough
// for the series to converge.
Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q);

// Stabilizing solution of the discrete algebraic Riccati equation
//   p = a' p a - a' p b (r + b' p b)^{-1} b' p a + q
// by fixed-point iteration from p = q. Throws NotStabilizable if the
// iteration fails to settle.
Matrix solve_dare(const Matrix& a, const Matrix& b, const SpdMatrix& q, const SpdMatrix& r);

// State-feedback gain k = -(r + b' p b)^{-1} b' p a so that u = k x
// minimizes the standard infinite-horizon quadratic cost. The returned
// gain makes a + b k Schur stable.
Matrix dlqr_gain(const Matrix& a, const Matrix& b, const SpdMatrix& q, const SpdMatrix& r);

// Steady-state observer gain l = -a p c' (c p c' + sigma_z)^{-1}, the
// sign convention matching an observer update that adds l * y. The
// returned gain makes a + l c Schur stable. Throws NotDetectable if the
// dual Riccati iteration fails.
Matrix kalman_gain(const Matrix& a, const Matrix& c, const SpdMatrix& sigma_w,
                   const SpdMatrix& sigma_z);

// Rank of a matrix up to a relative singular-value threshold of 1e-9.
int numerical_rank(const Matrix& a);

// Controllability matrix [b, a b, ..., a^{n-1} b].
Matrix controllability_matrix(const Matrix& a, const Matrix& b);

// Observability matrix [c; c a; ...; c a^{n-1}].
Matrix observability_matrix(const Matrix& a, const Matrix& c);

}  // namespace wms
