#include "wms/rng.hpp"

#include <cmath>
#include <numbers>

namespace wms {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : state_(mix(seed + kGolden) ^ mix(stream + 0x6A09E667F3BCC909ull)) {}

std::uint64_t RandomStream::next_raw() {
  state_ += kGolden;
  return mix(state_);
}

double RandomStream::next_uniform() {
  // 53 significant bits, shifted into (0, 1]
  return (static_cast<double>(next_raw() >> 11) + 1.0) * 0x1.0p-53;
}

double RandomStream::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

GaussianSampler::GaussianSampler(const SpdMatrix& covariance, std::uint64_t seed,
                                 std::uint64_t stream)
    : factor_(cholesky(covariance)), rng_(seed, stream) {}

Matrix GaussianSampler::sample() {
  const int n = dim();
  Matrix draw(n, 1);
  for (int i = 0; i < n; ++i) draw(i, 0) = rng_.next_gaussian();
  return factor_ * draw;
}

}  // namespace wms
