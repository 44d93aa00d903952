#include "mstgnn/gradcheck.hpp"

#include <cmath>

namespace mstgnn {

namespace {

std::optional<double> evaluate(const ScalarFn& f) {
  try {
    Tape tape;
    const double v = f(tape).value().item();
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

}  // namespace

GradCheckReport grad_check(std::string label, const ScalarFn& f, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  report.label = std::move(label);

  std::vector<bool> saved_trainable;
  for (Parameter* p : params) {
    saved_trainable.push_back(p->trainable());
    p->set_trainable(true);
    p->zero_grad();
  }
  auto restore = [&] {
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->set_trainable(saved_trainable[k]);
  };

  try {
    Tape tape;
    Var out = f(tape);
    tape.backward(out);
  } catch (const NumericError& e) {
    report.aborted = std::string("non-finite loss at the base point: ") + e.what();
    restore();
    return report;
  }

  for (Parameter* p : params) {
    const Tensor analytic = p->grad();
    Tensor& value = p->value();
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (p->mask() && (*p->mask())[i] == 0.0) continue;
      const double original = value[i];
      value[i] = original + options.step;
      const auto plus = evaluate(f);
      value[i] = original - options.step;
      const auto minus = evaluate(f);
      value[i] = original;
      if (!plus || !minus) {
        report.aborted = "non-finite loss while perturbing " + p->name() + "[" + std::to_string(i) + "]";
        restore();
        return report;
      }
      const double numeric = (*plus - *minus) / (2.0 * options.step);
      const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
      ++report.checked;
      if (report.worst_entry.empty() || err > report.max_error) {
        report.max_error = err;
        report.worst_entry = p->name() + "[" + std::to_string(i) + "]";
      }
    }
  }
  restore();
  return report;
}

}  // namespace mstgnn
