#include "wms/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wms {
namespace {

using cplx = std::complex<double>;

// Householder reduction to upper Hessenberg form (similarity transform, so
// eigenvalues are preserved).
Matrix hessenberg(Matrix a) {
  const int n = a.rows();
  std::vector<double> v(static_cast<size_t>(n), 0.0);
  for (int k = 0; k + 2 < n; ++k) {
    double norm2 = 0.0;
    for (int i = k + 1; i < n; ++i) norm2 += a(i, k) * a(i, k);
    if (norm2 == 0.0) continue;
    const double norm = std::sqrt(norm2);
    const double alpha = a(k + 1, k) >= 0.0 ? -norm : norm;
    for (int i = 0; i <= k; ++i) v[i] = 0.0;
    for (int i = k + 1; i < n; ++i) v[i] = a(i, k);
    v[k + 1] -= alpha;
    double vnorm2 = 0.0;
    for (int i = k + 1; i < n; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    // a <- H a with H = I - 2 v v' / v'v
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s *= 2.0 / vnorm2;
      for (int i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    // a <- a H
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s *= 2.0 / vnorm2;
      for (int j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    a(k + 1, k) = alpha;
    for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
  return a;
}

// Complex Givens rotation [c, s; -conj(s), c] (c real) sending (f, g) to
// (r, 0).
void givens(cplx f, cplx g, double& c, cplx& s) {
  const double af = std::abs(f);
  const double ag = std::abs(g);
  if (ag == 0.0) {
    c = 1.0;
    s = 0.0;
    return;
  }
  if (af == 0.0) {
    c = 0.0;
    s = std::conj(g) / ag;
    return;
  }
  const double r = std::hypot(af, ag);
  c = af / r;
  s = (f / af) * (std::conj(g) / r);
}

// The eigenvalues of a complex 2x2 block, larger-shift-first not guaranteed.
std::pair<cplx, cplx> eig2(cplx a11, cplx a12, cplx a21, cplx a22) {
  const cplx tr = a11 + a22;
  const cplx disc = std::sqrt(tr * tr - 4.0 * (a11 * a22 - a12 * a21));
  return {0.5 * (tr + disc), 0.5 * (tr - disc)};
}

}  // namespace

std::vector<cplx> eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigenvalues need a square matrix");
  const int n = a.rows();
  std::vector<cplx> eig(static_cast<size_t>(n));
  if (n == 0) return eig;
  if (n == 1) {
    eig[0] = cplx(a(0, 0), 0.0);
    return eig;
  }

  const Matrix hr = hessenberg(a);
  std::vector<cplx> hbuf(static_cast<size_t>(n) * n);
  auto H = [&](int i, int j) -> cplx& { return hbuf[static_cast<size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H(i, j) = cplx(hr(i, j), 0.0);

  const double eps = std::numeric_limits<double>::epsilon();
  const double anorm = hr.frobenius_norm();
  std::vector<double> cs(static_cast<size_t>(n));
  std::vector<cplx> ss(static_cast<size_t>(n));

  int hi = n - 1;
  int iter = 0;  // QR steps spent on the current trailing block
  int total = 0;
  const int cap = 100 * n;

  while (hi >= 0) {
    // Scan for a negligible subdiagonal entry splitting off a trailing block.
    int lo = hi;
    while (lo > 0) {
      const double sub = std::abs(H(lo, lo - 1));
      const double diag = std::abs(H(lo - 1, lo - 1)) + std::abs(H(lo, lo));
      if (sub <= eps * (diag > 0.0 ? diag : anorm)) {
        H(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      eig[hi] = H(hi, hi);
      --hi;
      iter = 0;
      continue;
    }
    if (lo == hi - 1) {
      const auto [l1, l2] = eig2(H(lo, lo), H(lo, hi), H(hi, lo), H(hi, hi));
      eig[hi] = l1;
      eig[lo] = l2;
      hi = lo - 1;
      iter = 0;
      continue;
    }

    if (++total > cap) throw NoConvergence("eigenvalue iteration exceeded its sweep budget");
    ++iter;

    cplx shift;
    if (iter % 20 == 10) {
      // occasional ad-hoc shift to break out of nonconverging cycles
      shift = H(hi, hi) +
              cplx(1.5 * (std::abs(H(hi, hi - 1)) + std::abs(H(hi - 1, hi - 2))), 0.0);
    } else {
      const auto [l1, l2] = eig2(H(hi - 1, hi - 1), H(hi - 1, hi), H(hi, hi - 1), H(hi, hi));
      shift = std::abs(l1 - H(hi, hi)) <= std::abs(l2 - H(hi, hi)) ? l1 : l2;
    }

    // One explicit QR step on the active block: factor H - shift I with
    // Givens rotations, then remultiply in reverse order and restore the
    // shift. Hessenberg form is preserved.
    for (int k = lo; k <= hi; ++k) H(k, k) -= shift;
    for (int k = lo; k < hi; ++k) {
      double c;
      cplx s;
      givens(H(k, k), H(k + 1, k), c, s);
      cs[k] = c;
      ss[k] = s;
      for (int j = k; j <= hi; ++j) {
        const cplx t1 = H(k, j);
        const cplx t2 = H(k + 1, j);
        H(k, j) = c * t1 + s * t2;
        H(k + 1, j) = -std::conj(s) * t1 + c * t2;
      }
      H(k + 1, k) = 0.0;
    }
    for (int k = lo; k < hi; ++k) {
      const double c = cs[k];
      const cplx s = ss[k];
      const int last = std::min(k + 1, hi);
      for (int i = lo; i <= last; ++i) {
        const cplx t1 = H(i, k);
        const cplx t2 = H(i, k + 1);
        H(i, k) = c * t1 + std::conj(s) * t2;
        H(i, k + 1) = -s * t1 + c * t2;
      }
    }
    for (int k = lo; k <= hi; ++k) H(k, k) += shift;
  }
  return eig;
}

double spectral_radius(const Matrix& a) {
  double r = 0.0;
  for (const cplx& e : eigenvalues(a)) r = std::max(r, std::abs(e));
  return r;
}

bool is_schur_stable(const Matrix& a) { return spectral_radius(a) < 1.0 - 1e-9; }

Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows())
    throw DimensionMismatch("Lyapunov solver needs square matrices of equal size");

  // Doubling iteration: sigma accumulates sum_k a^k q (a^k)', with the power
  // of a squared each round, so convergence is quadratic for stable a.
  Matrix sigma = q;
  Matrix ak = a;
  bool settled = false;
  for (int it = 0; it < 128; ++it) {
    const Matrix update = ak * sigma * ak.transpose();
    sigma += update;
    // A non-finite norm covers both inf entries and norms that overflow
    // while the entries are still representable; either way the series is
    // diverging.
    const double snorm = sigma.frobenius_norm();
    if (!std::isfinite(snorm))
      throw NotConverged("Lyapunov iteration diverged; the transition matrix is not stable");
    if (update.frobenius_norm() <= 1e-14 * std::max(1.0, snorm)) {
      settled = true;
      break;
    }
    ak = ak * ak;
  }
  if (!settled) throw NotConverged("Lyapunov iteration did not settle within the cap");

  const Matrix residual = a * sigma * a.transpose() + q - sigma;
  if (!(residual.frobenius_norm() <= 1e-10 * std::max(1.0, sigma.frobenius_norm())))
    throw NotConverged("Lyapunov solution failed the residual check");
  return sigma;
}

Matrix solve_dare(const Matrix& a, const Matrix& b, const SpdMatrix& q, const SpdMatrix& r) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n || q.dim() != n || r.dim() != b.cols())
    throw DimensionMismatch("Riccati solver dimensions are inconsistent");

  Matrix p = q.matrix();
  for (int it = 0; it < 10000; ++it) {
    const Matrix bt = b.transpose();
    const Matrix gain = solve_spd(bt * p * b + r.matrix(), bt * p * a);
    Matrix pn = a.transpose() * p * (a - b * gain) + q.matrix();
    pn = 0.5 * (pn + pn.transpose());
    if (!pn.is_finite()) throw NotStabilizable("Riccati iteration diverged");
    const double rel = (pn - p).frobenius_norm() / std::max(1.0, pn.frobenius_norm());
    p = pn;
    if (rel <= 1e-12) return p;
  }
  throw NotStabilizable("Riccati iteration did not converge");
}

Matrix dlqr_gain(const Matrix& a, const Matrix& b, const SpdMatrix& q, const SpdMatrix& r) {
  const Matrix p = solve_dare(a, b, q, r);
  const Matrix bt = b.transpose();
  const Matrix k = -solve_spd(bt * p * b + r.matrix(), bt * p * a);
  if (!is_schur_stable(a + b * k))
    throw NotStabilizable("feedback gain does not stabilize the plant");
  return k;
}

Matrix kalman_gain(const Matrix& a, const Matrix& c, const SpdMatrix& sigma_w,
                   const SpdMatrix& sigma_z) {
  Matrix p;
  try {
    // The observer Riccati equation is the control one on the transposed pair.
    p = solve_dare(a.transpose(), c.transpose(), sigma_w, sigma_z);
  } catch (const NotStabilizable&) {
    throw NotDetectable("observer Riccati iteration did not converge");
  }
  const Matrix innov = c * p * c.transpose() + sigma_z.matrix();
  const Matrix l = -(a * p * c.transpose() * inverse_spd(innov));
  if (!is_schur_stable(a + l * c))
    throw NotDetectable("observer gain does not stabilize the error dynamics");
  return l;
}

int numerical_rank(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  // Work with the smaller Gram matrix; its eigenvalues are squared singular
  // values of a.
  const Matrix g = a.rows() <= a.cols() ? a * a.transpose() : a.transpose() * a;
  const auto eigs = eigenvalues(g);
  double smax2 = 0.0;
  for (const cplx& e : eigs) smax2 = std::max(smax2, e.real());
  if (smax2 <= 0.0) return 0;
  const double threshold = 1e-9 * std::sqrt(smax2);
  int rank = 0;
  for (const cplx& e : eigs)
    if (std::sqrt(std::max(0.0, e.real())) > threshold) ++rank;
  return rank;
}

Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw DimensionMismatch("controllability matrix dimensions are inconsistent");
  Matrix result = b;
  Matrix power = b;
  for (int k = 1; k < a.rows(); ++k) {
    power = a * power;
    result = Matrix::hstack(result, power);
  }
  return result;
}

Matrix observability_matrix(const Matrix& a, const Matrix& c) {
  if (a.rows() != a.cols() || a.cols() != c.cols())
    throw DimensionMismatch("observability matrix dimensions are inconsistent");
  Matrix result = c;
  Matrix power = c;
  for (int k = 1; k < a.rows(); ++k) {
    power = power * a;
    result = Matrix::vstack(result, power);
  }
  return result;
}

}  // namespace wms
