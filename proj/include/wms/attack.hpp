#pragma once

// ---------------------------------------------------------------------------
// Parameterized sensor attack: the measurement reaching the controller is
// corrupted additively by v = alpha (c x + z) + c xi + zeta, where xi is a
// false state the attacker evolves under the closed-loop dynamics it expects
// the controller to produce. alpha = -1 with matched noise levels is a full
// replacement (replay-style) attack; smaller magnitudes blend false and true
// signal.
// ---------------------------------------------------------------------------

#include <cstdint>
#include <utility>

#include "wms/matrix.hpp"
#include "wms/rng.hpp"

namespace wms {

struct AttackSpec {
  double alpha = 0.0;  // fraction of the true output leaking through
  Matrix xi0;          // p x 1 initial false state
  SpdMatrix sigma_o;   // p x p false-state process noise covariance
  SpdMatrix sigma_s;   // m x m additive sensor noise covariance
};

struct AttackState {
  Matrix xi;  // current false state, p x 1
};

// Noise sources for one attack instance, carved out of the run seed on the
// attack-reserved streams.
struct AttackRng {
  GaussianSampler omega;  // drives the false-state recursion
  GaussianSampler zeta;   // added directly to the sensor feed

  AttackRng(const AttackSpec& spec, std::uint64_t seed)
      : omega(spec.sigma_o, seed, streams::kAttackProcess),
        zeta(spec.sigma_s, seed, streams::kAttackSensor) {}
};

// One attack step: returns the sensor corruption v for the current step and
// the advanced false state. closed_a is the (a + b k) the attacker models;
// c is the output map it spoofs through.
std::pair<Matrix, AttackState> attack_step(const AttackSpec& spec, const AttackState& state,
                                           const Matrix& true_output, const Matrix& closed_a,
                                           const Matrix& c, AttackRng& rng);

}  // namespace wms
