#include "mstgnn/losses.hpp"

#include <string>

namespace mstgnn {

void LossWeights::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) throw Error("loss weights must be non-negative");
}

Var l1_prediction_loss(Var prediction, Var truth) {
  if (prediction.shape() != truth.shape())
    throw DimensionError("prediction loss: " + shape_string(prediction.shape()) + " vs " +
                         shape_string(truth.shape()));
  return sum(abs(sub(truth, prediction)));
}

Var gram_matrix_loss(Var prediction, Var truth, Var last_observed) {
  if (prediction.shape() != truth.shape() || prediction.value().rank() != 3)
    throw DimensionError("gram loss: " + shape_string(prediction.shape()) + " vs " + shape_string(truth.shape()));
  if (last_observed.value().rank() != 2 || last_observed.dim(0) != prediction.dim(1) ||
      last_observed.dim(1) != prediction.dim(2))
    throw DimensionError("gram loss: last observed frame " + shape_string(last_observed.shape()));
  const std::size_t horizon = prediction.dim(0);
  Var prev_pred = last_observed, prev_truth = last_observed;
  std::vector<Var> terms;
  for (std::size_t t = 0; t < horizon; ++t) {
    const Var cur_pred = slice_leading(prediction, t);
    const Var cur_truth = slice_leading(truth, t);
    const Var gram_pred = add(row_outer(prev_pred), row_outer(cur_pred));
    const Var gram_truth = add(row_outer(prev_truth), row_outer(cur_truth));
    terms.push_back(sub(gram_truth, gram_pred));
    prev_pred = cur_pred;
    prev_truth = cur_truth;
  }
  return affine(sum(square(stack_leading(terms))), 1.0 / static_cast<double>(horizon), 0.0);
}

Var entropy_loss(Tape& tape, const std::vector<Var>& assignments, double eps) {
  if (assignments.empty()) return tape.constant(Tensor::scalar(0.0));
  std::vector<Var> per_op;
  for (Var psi : assignments) {
    if (psi.value().rank() != 2) throw DimensionError("entropy loss expects assignment matrices");
    for (double v : psi.value().values())
      if (v < 0.0) throw Error("entropy loss: assignment matrix has negative entries");
    const double rows = static_cast<double>(psi.dim(0));
    per_op.push_back(affine(sum(mul(psi, log_clamped(psi, eps))), -1.0 / rows, 0.0));
  }
  Var total = per_op.front();
  for (std::size_t k = 1; k < per_op.size(); ++k) total = add(total, per_op[k]);
  return affine(total, 1.0 / static_cast<double>(per_op.size()), 0.0);
}

Var total_loss(Var prediction, Var gram, Var entropy, const LossWeights& weights) {
  weights.validate();
  return add(add(affine(prediction, weights.alpha, 0.0), affine(gram, weights.beta, 0.0)),
             affine(entropy, weights.gamma, 0.0));
}

}  // namespace mstgnn
