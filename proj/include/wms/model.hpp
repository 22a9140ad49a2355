#pragma once

// ---------------------------------------------------------------------------
// Plant definition and closed-loop assembly. The controller applies
// u = K xhat + e with a private excitation e, and a Luenberger observer
// tracks the state. Assembly also builds the stacked [x; xhat] and
// transformed [x; delta] dynamics (delta = xhat - x), the watermark lag
// kprime, and the stationary covariances the detector tests against.
// ---------------------------------------------------------------------------

#include <optional>

#include "wms/linalg.hpp"
#include "wms/matrix.hpp"

namespace wms {

// Discrete-time LTI plant x' = a x + b u + w, y = c x + z.
struct PlantModel {
  Matrix a;           // p x p state transition
  Matrix b;           // p x q input map
  Matrix c;           // m x p output map
  SpdMatrix sigma_w;  // process noise covariance (p x p)
  SpdMatrix sigma_z;  // measurement noise covariance (m x m)

  int p() const { return a.rows(); }  // state dimension
  int q() const { return b.cols(); }  // input dimension
  int m() const { return c.rows(); }  // output dimension
};

// Throws DimensionMismatch unless all plant matrices are mutually consistent.
void validate_plant(const PlantModel& plant);

// Fully assembled watermarked closed loop. The stacked state is
// [x; xhat] with transition a_under; the transformed state is [x; delta]
// with transition a_dunder. h_under captures how output-proportional
// tampering v = alpha (c x + z) enters the loop: the tampered transition is
// a_under + alpha h_under.
struct ClosedLoopModel {
  PlantModel plant;
  Matrix k_gain;      // q x p feedback gain, u = k_gain xhat + e
  Matrix l_gain;      // p x m observer gain, a + l_gain c Schur stable
  SpdMatrix sigma_e;  // watermark covariance (q x q), strictly PD

  Matrix a_under;  // 2p x 2p, [[a, b k], [-l c, a + b k + l c]]
  Matrix b_under;  // 2p x q, [b; b] (watermark injection)
  Matrix d_under;  // 2p x p, [I; 0] (process noise injection)
  Matrix l_under;  // 2p x m, [0; -l] (measurement noise injection)
  Matrix h_under;  // 2p x 2p, [[0, 0], [-l c, 0]] (tamper sensitivity)

  Matrix a_dunder;  // 2p x 2p, [[a + b k, b k], [0, a + l c]]
  Matrix c_dunder;  // m x 2p, [-c, c]; maps [x; xhat] to the noiseless residual
  Matrix m_dunder;  // p x 2p, [0, I]; picks delta from [x; delta]

  int kprime = 0;  // smallest k with c (a + b k_gain)^k b nonzero

  SpdMatrix sigma_x;      // stationary covariance of [x; delta]
  SpdMatrix sigma_delta;  // stationary covariance of the observer error

  Matrix closed_a() const { return plant.a + plant.b * k_gain; }
  Matrix observer_a() const { return plant.a + l_gain * plant.c; }

  // Transition of the stacked [x; xhat] state when the sensor feed is
  // scaled by (1 + alpha).
  Matrix tampered_a(double alpha) const { return a_under + alpha * h_under; }

  // Stationary covariance of the honest residual c xhat - y.
  SpdMatrix residual_covariance() const;
};

// Smallest k in 0..p-1 such that c (a + b k_gain)^k b is nonzero, i.e. the
// number of extra steps before an input change reaches the output. The
// nonzero test compares the max-abs entry against the scale-aware threshold
// 1e-9 (1 + |c| |b| |a + b k_gain|^k) in Frobenius norms, so structurally
// zero products with rounding dust are not misread. Absent when every power
// up to p-1 vanishes (then all powers vanish, by Cayley-Hamilton).
std::optional<int> compute_kprime(const Matrix& a, const Matrix& b, const Matrix& c,
                                  const Matrix& k_gain);

// Builds every derived matrix and covariance for the closed loop.
// Throws UnstableClosedLoop unless a+bk and a+lc are both Schur stable,
// SingularExcitation unless sigma_e is strictly PD, and NoWatermarkPath
// when kprime does not exist.
ClosedLoopModel assemble_closed_loop(const PlantModel& plant, const Matrix& k_gain,
                                     const Matrix& l_gain, const SpdMatrix& sigma_e);

// a_under^r b_under by repeated multiplication; r capped at 64.
Matrix powered_input_map(const ClosedLoopModel& model, int r);

// (a_under + alpha h_under)^k b_under; k capped at 64. Equals
// powered_input_map(model, k) for all k <= kprime regardless of alpha.
Matrix attacked_input_map(const ClosedLoopModel& model, double alpha, int k);

}  // namespace wms
