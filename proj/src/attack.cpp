#include "wms/attack.hpp"

namespace wms {

std::pair<Matrix, AttackState> attack_step(const AttackSpec& spec, const AttackState& state,
                                           const Matrix& true_output, const Matrix& closed_a,
                                           const Matrix& c, AttackRng& rng) {
  const int p = spec.sigma_o.dim();
  const int m = spec.sigma_s.dim();
  if (state.xi.rows() != p || state.xi.cols() != 1)
    throw DimensionMismatch("attack state must be a p x 1 column");
  if (true_output.rows() != m || true_output.cols() != 1)
    throw DimensionMismatch("true output must be an m x 1 column");
  if (closed_a.rows() != p || closed_a.cols() != p)
    throw DimensionMismatch("attacker closed-loop matrix must be p x p");
  if (c.rows() != m || c.cols() != p)
    throw DimensionMismatch("attacker output map must be m x p");

  Matrix v = spec.alpha * true_output + c * state.xi + rng.zeta.sample();
  AttackState next{closed_a * state.xi + rng.omega.sample()};
  return {std::move(v), std::move(next)};
}

}  // namespace wms
