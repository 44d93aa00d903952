#pragma once

#include <cstddef>
#include <vector>

#include "mstgnn/autodiff.hpp"
#include "mstgnn/graphs.hpp"
#include "mstgnn/random.hpp"

namespace mstgnn {

enum class AttentionMode {
  Graph,     ///< graph-based attention scores (GA-GRU)
  Disabled,  ///< scores fixed to 1, i.e. a plain per-joint GRU
};

struct DecoderConfig {
  std::size_t hidden_dim = 256;
  std::size_t readout_dim = 128;
  int diff_order = 2;
  AttentionMode attention = AttentionMode::Graph;
};

struct AffineMap {
  ParamId weight = 0;
  ParamId bias = 0;
};

struct GaGruParams {
  ParamId input_graph = 0;   ///< A_I [M x M]
  ParamId hidden_graph = 0;  ///< A_H [M x M]
  ParamId input_att_w = 0, input_att_u = 0;
  ParamId hidden_att_w = 0, hidden_att_u = 0;
  AffineMap reset_in, reset_h, update_in, update_h, cand_in, cand_h;
  AffineMap readout_hidden, readout_out;
};

struct Decoder {
  DecoderConfig config;
  std::size_t joints = 0;
  std::size_t channels = 0;
  GaGruParams params;

  std::size_t input_dim() const { return channels * static_cast<std::size_t>(config.diff_order + 1); }
  std::vector<ParamId> graph_params() const { return {params.input_graph, params.hidden_graph}; }
};

Decoder make_decoder(ParameterStore& store, const DecoderConfig& config, const SkeletonSpec& skeleton, Rng& rng);

/// Per-joint scores sigmoid(ReLU(A z W) U), shape [M x 1].
Var attention_scores(Var z, Var graph, Var w, Var u);
/// Row i of z scaled by its attention score.
Var attention_gate(Var z, Var graph, Var w, Var u);

struct GaGruStep {
  Var hidden;  ///< H^(t+1)
  Var reset;
  Var update;
  Var candidate;
};

/// One gated update from input I [M x C(b+1)] and state H [M x D_h].
GaGruStep ga_gru_cell(Tape& tape, ParameterStore& store, const Decoder& decoder, Var input, Var hidden);

/// Two-layer readout H [M x D_h] -> displacement [M x C].
Var readout(Tape& tape, ParameterStore& store, const Decoder& decoder, Var hidden);

struct RolloutOptions {
  std::size_t horizon = 5;
  /// Feed ground-truth frames back instead of predictions (requires truth).
  bool teacher_forcing = false;
  const Tensor* truth = nullptr;
  double divergence_limit = 1e6;
};

/// Autoregressive decoding. `history` holds observed frames [T x M x C];
/// its last diff_order + 1 frames seed the rolling difference buffer.
/// Returns predictions [horizon x M x C].
Var rollout(Tape& tape, ParameterStore& store, const Decoder& decoder, Var history, Var initial_hidden,
            const RolloutOptions& options);

}  // namespace mstgnn
