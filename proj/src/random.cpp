#include "mstgnn/random.hpp"

#include <cmath>

namespace mstgnn {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain) {
  Tensor t(std::move(shape));
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

}  // namespace mstgnn
