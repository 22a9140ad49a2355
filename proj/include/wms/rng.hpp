#pragma once

#include <cstdint>

#include "wms/matrix.hpp"

namespace wms {

// Fixed stream ids so every noise source in a run draws from its own
// decoupled sequence of the same user seed.
namespace streams {
inline constexpr std::uint64_t kProcessNoise = 0;
inline constexpr std::uint64_t kMeasurementNoise = 1;
inline constexpr std::uint64_t kWatermark = 2;
inline constexpr std::uint64_t kAttackProcess = 3;
inline constexpr std::uint64_t kAttackSensor = 4;
}  // namespace streams

// Deterministic pseudo-random stream built on the splitmix64 mixer. A
// (seed, stream) pair fully determines the sequence, so independent noise
// sources can share one user-facing seed without ever consuming from each
// other's streams. Cheap to construct and copy.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  // Uniform draw in (0, 1]; the open lower end keeps log() safe.
  double next_uniform();

  // Standard normal draw via Box-Muller; pairs are generated together and
  // the second value cached.
  double next_gaussian();

 private:
  std::uint64_t next_raw();

  std::uint64_t state_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Draws from N(0, covariance) by shaping standard normals with a cached
// Cholesky factor. Always consumes exactly dim() normals per sample so the
// underlying stream stays aligned regardless of the covariance content.
class GaussianSampler {
 public:
  GaussianSampler(const SpdMatrix& covariance, std::uint64_t seed, std::uint64_t stream);

  int dim() const { return factor_.rows(); }

  // One draw as a dim() x 1 column.
  Matrix sample();

 private:
  Matrix factor_;
  RandomStream rng_;
};

}  // namespace wms
