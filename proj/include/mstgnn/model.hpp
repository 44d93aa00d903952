#pragma once

#include <cstdint>
#include <vector>

#include "mstgnn/decoder.hpp"
#include "mstgnn/encoder.hpp"
#include "mstgnn/graphs.hpp"

namespace mstgnn {

struct ModelConfig {
  SkeletonSpec skeleton;
  EncoderConfig encoder;
  std::size_t horizon = 5;
  AttentionMode attention = AttentionMode::Graph;
  bool trainable_graphs = true;
  std::uint64_t seed = 0;  ///< parameter initialization

  void validate() const;
};

/// Encoder-decoder predictor: observed [T x M x C] -> future [horizon x M x C].
class Model {
 public:
  explicit Model(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return store_; }
  const ParameterStore& params() const noexcept { return store_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  const Decoder& decoder() const noexcept { return decoder_; }

  /// Every adjacency matrix the model learns (encoder and decoder).
  std::vector<ParamId> graph_params() const;

  struct ForwardOptions {
    bool teacher_forcing = false;
    const Tensor* truth = nullptr;
  };

  struct Forward {
    Var prediction;
    Var hidden;
    EncoderTrace trace;
    std::vector<Var> pool_ops;    ///< Psi_{0->r} of every layer and scale
    std::vector<Var> unpool_ops;  ///< Psi_{r->0} of every layer and scale
  };

  Forward forward(Tape& tape, const Tensor& observed, const ForwardOptions& options) ;
  Forward forward(Tape& tape, const Tensor& observed) { return forward(tape, observed, ForwardOptions{}); }

  /// Forward pass without gradients.
  Tensor predict(const Tensor& observed);

 private:
  ModelConfig config_;
  ParameterStore store_;
  Encoder encoder_;
  Decoder decoder_;
};

}  // namespace mstgnn
