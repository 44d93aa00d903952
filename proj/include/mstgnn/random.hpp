#pragma once

#include <cstdint>
#include <random>

#include "mstgnn/tensor.hpp"

namespace mstgnn {

/// Seeded generator with library-independent uniform draws, so that
/// parameters and synthetic data are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// Uniform Glorot initialization scaled by `gain`.
Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain = 1.0);

}  // namespace mstgnn
