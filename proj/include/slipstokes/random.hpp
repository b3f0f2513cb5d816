#pragma once

#include "slipstokes/geometry.hpp"
#include "slipstokes/spectral.hpp"

#include <cstdint>

namespace slipstokes {

/// Counter-based generator: every (seed, stream) pair yields an independent
/// sequence, so batch samples can be drawn in any order or in parallel.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Box-Muller; platform independent.
  double normal();
  Eigen::VectorXd normal_vector(int count);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stream coefficients of a random velocity: i.i.d. standard normal
/// coordinates in the velocity-orthonormal basis C e_i / sqrt(lambda_i) over
/// the first `modes` modes.
Eigen::VectorXd random_stream_modal(const EigenBasis& basis, SampleRng& rng, int modes);

}  // namespace slipstokes
