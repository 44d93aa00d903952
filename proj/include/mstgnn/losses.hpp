#pragma once

#include <vector>

#include "mstgnn/autodiff.hpp"

namespace mstgnn {

struct LossWeights {
  double alpha = 1.0;   ///< prediction
  double beta = 0.01;   ///< gram matrix
  double gamma = 0.03;  ///< pooling entropy

  void validate() const;
};

/// Sum of absolute differences over all entries.
Var l1_prediction_loss(Var prediction, Var truth);

/// (1/dT) sum_i sum_t ||V_i - V^_i||_F^2 with V_i = a a^T + b b^T for the
/// consecutive frames (a, b) of joint i. The first pair of both sequences
/// uses `last_observed` [M x C] as its earlier frame.
Var gram_matrix_loss(Var prediction, Var truth, Var last_observed);

/// Mean over operators of -(1/M) sum_i psi_i . log(psi_i), with log clamped
/// at log(eps). Zero when the list is empty. Rejects negative entries.
Var entropy_loss(Tape& tape, const std::vector<Var>& assignments, double eps = 1e-12);

struct LossTerms {
  Var prediction;
  Var gram;
  Var entropy;
  Var total;
};

/// alpha * L_pred + beta * L_gram + gamma * L_ent.
Var total_loss(Var prediction, Var gram, Var entropy, const LossWeights& weights);

}  // namespace mstgnn
