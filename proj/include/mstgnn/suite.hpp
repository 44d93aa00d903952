#pragma once

#include <cstdint>
#include <vector>

#include "mstgnn/gradcheck.hpp"

namespace mstgnn {

struct GradSuiteOptions {
  GradCheckOptions check;
  std::uint64_t seed = 1;
  bool include_model = true;  ///< end-to-end check of a small encoder-decoder
};

/// Finite-difference checks of every differentiable primitive, layer and
/// loss, then of a T=4, M=5, two-scale model with D_h=8 under the total loss.
std::vector<GradCheckReport> gradient_suite(const GradSuiteOptions& options = {});

}  // namespace mstgnn
