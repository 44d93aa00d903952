#pragma once

#include <cmath>
#include <cstdint>

#include "mstgnn/autodiff.hpp"
#include "mstgnn/random.hpp"
#include "mstgnn/tensor.hpp"

namespace testing {

inline mstgnn::Tensor random_tensor(mstgnn::Shape shape, mstgnn::Rng& rng, double lo = -1.0, double hi = 1.0) {
  mstgnn::Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline mstgnn::Tensor random_tensor(mstgnn::Shape shape, std::uint64_t seed) {
  mstgnn::Rng rng(seed);
  return random_tensor(std::move(shape), rng);
}

/// Row-stochastic [m x n] matrix with strictly positive entries.
inline mstgnn::Tensor random_stochastic(std::size_t m, std::size_t n, mstgnn::Rng& rng) {
  mstgnn::Tensor t({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += t(i, j) = rng.uniform(0.05, 1.0);
    for (std::size_t j = 0; j < n; ++j) t(i, j) /= total;
  }
  return t;
}

/// Forward value of a differentiable op applied to constants.
template <class F>
mstgnn::Tensor eval(F&& f) {
  mstgnn::Tape tape;
  return f(tape).value();
}

}  // namespace testing
