#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mstgnn/autodiff.hpp"

namespace mstgnn {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
};

struct GradCheckReport {
  std::string label;
  std::size_t checked = 0;
  double max_error = 0.0;
  std::string worst_entry;  ///< "<param>[index]" of the largest error
  std::optional<std::string> aborted;

  bool passed(double tolerance) const { return !aborted && max_error < tolerance; }
};

/// Builds a scalar on the supplied tape, reading parameters via Tape::parameter.
using ScalarFn = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences for every entry
/// of every listed parameter. The error per entry is
/// |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check(std::string label, const ScalarFn& f, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace mstgnn
