#pragma once

#include <cstddef>
#include <vector>

#include "mstgnn/autodiff.hpp"
#include "mstgnn/graphs.hpp"
#include "mstgnn/mstgcu.hpp"
#include "mstgnn/random.hpp"

namespace mstgnn {

struct EncoderConfig {
  std::size_t frames = 10;
  int diff_order = 2;
  std::size_t initial_dim = 64;
  std::vector<std::size_t> layer_dims{64, 64, 128, 256};
  std::size_t spatial_scales = 3;
  std::size_t temporal_scales = 3;
  int spatial_hops = 1;
  int temporal_hops = 4;
  std::size_t embed_dim = 16;
  ConvOrder order = ConvOrder::SpatialFirst;
  bool residual = true;

  std::size_t hidden_dim() const { return layer_dims.back(); }
  void validate() const;
};

struct Encoder {
  EncoderConfig config;
  ParamId initial_graph = 0;
  ParamId initial_filter = 0;
  std::vector<MstGcuLayer> layers;

  std::vector<ParamId> graph_params() const;
};

Encoder make_encoder(ParameterStore& store, const EncoderConfig& config, const SkeletonSpec& skeleton, Rng& rng);

/// Backward difference along frames with a zero first row: (D y)[t] = y[t] - y[t-1].
Tensor difference_operator(std::size_t frames);

/// Channel concatenation [Delta^0 X | Delta^1 X | ... | Delta^order X], where
/// every difference of order >= 1 is zero at the first frame.
Var diff_features(Var x, int order);
Tensor diff_features(const Tensor& x, int order);

struct EncoderTrace {
  std::vector<MstGcuTrace> layers;
};

/// Observed motion [T x M x C] -> motion state H [M x D_h].
Var encode(Tape& tape, ParameterStore& store, const Encoder& encoder, Var observed, EncoderTrace* trace = nullptr);

}  // namespace mstgnn
