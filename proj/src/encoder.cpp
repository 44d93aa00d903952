#include "mstgnn/encoder.hpp"

#include <string>

#include "mstgnn/convolution.hpp"

namespace mstgnn {

void EncoderConfig::validate() const {
  if (diff_order < 0) throw DimensionError("difference order must be non-negative");
  if (frames < static_cast<std::size_t>(diff_order) + 1)
    throw DimensionError("observed length " + std::to_string(frames) + " is too short for difference order " +
                         std::to_string(diff_order));
  if (frames < 3) throw DimensionError("observed length must be at least 3 frames");
  if (layer_dims.empty()) throw DimensionError("encoder needs at least one MST-GCU layer");
  if (initial_dim == 0 || embed_dim == 0) throw DimensionError("feature widths must be positive");
  for (std::size_t d : layer_dims)
    if (d == 0) throw DimensionError("feature widths must be positive");
  if (spatial_hops < 0 || temporal_hops < 0) throw DimensionError("hop counts must be non-negative");
}

std::vector<ParamId> Encoder::graph_params() const {
  std::vector<ParamId> ids{initial_graph};
  for (const auto& l : layers) {
    const auto g = l.graph_params();
    ids.insert(ids.end(), g.begin(), g.end());
  }
  return ids;
}

Encoder make_encoder(ParameterStore& store, const EncoderConfig& config, const SkeletonSpec& skeleton, Rng& rng) {
  config.validate();
  skeleton.validate();
  Encoder enc;
  enc.config = config;
  const std::size_t in_channels = skeleton.channels * static_cast<std::size_t>(config.diff_order + 1);
  enc.initial_graph = store.add("encoder.initial_graph", init_spatial(skeleton).adjacency);
  const std::size_t slices = static_cast<std::size_t>(config.spatial_hops) + 1;
  enc.initial_filter = store.add("encoder.initial_filter",
                                 glorot({slices, in_channels, config.initial_dim}, slices * in_channels,
                                        config.initial_dim, rng));
  const ScaleSpec scales =
      ScaleSpec::make(skeleton.joints, config.frames, config.spatial_scales, config.temporal_scales);
  std::size_t in_dim = config.initial_dim;
  for (std::size_t k = 0; k < config.layer_dims.size(); ++k) {
    MstGcuConfig lc;
    lc.in_dim = in_dim;
    lc.out_dim = config.layer_dims[k];
    lc.frames = config.frames;
    lc.scales = scales;
    lc.spatial_hops = config.spatial_hops;
    lc.temporal_hops = config.temporal_hops;
    lc.embed_dim = config.embed_dim;
    lc.order = config.order;
    lc.residual = config.residual;
    enc.layers.push_back(make_mstgcu_layer(store, k, lc, skeleton, rng));
    in_dim = lc.out_dim;
  }
  return enc;
}

Tensor difference_operator(std::size_t frames) {
  Tensor d({frames, frames});
  for (std::size_t t = 1; t < frames; ++t) {
    d(t, t) = 1.0;
    d(t, t - 1) = -1.0;
  }
  return d;
}

Var diff_features(Var x, int order) {
  if (order < 0) throw DimensionError("difference order must be non-negative");
  if (x.value().rank() != 3) throw DimensionError("diff_features expects T x M x C, got " + shape_string(x.shape()));
  if (order == 0) return x;
  const Var d = x.tape->constant(difference_operator(x.dim(0)));
  std::vector<Var> parts{x};
  for (int b = 1; b <= order; ++b) parts.push_back(time_left_mul(d, parts.back()));
  return concat_last(parts);
}

Tensor diff_features(const Tensor& x, int order) {
  Tape tape;
  return diff_features(tape.constant(x), order).value();
}

Var encode(Tape& tape, ParameterStore& store, const Encoder& encoder, Var observed, EncoderTrace* trace) {
  const auto& c = encoder.config;
  if (observed.value().rank() != 3 || observed.dim(0) != c.frames)
    throw DimensionError("encoder expects " + std::to_string(c.frames) + " observed frames, got " +
                         shape_string(observed.shape()));
  Var h;
  try {
    h = spatial_graph_conv(diff_features(observed, c.diff_order), tape.parameter(store[encoder.initial_graph]),
                           tape.parameter(store[encoder.initial_filter]), c.spatial_hops);
  } catch (const NumericError& e) {
    throw NumericError(std::string("encoder input convolution: ") + e.what());
  }
  for (const auto& layer : encoder.layers) {
    MstGcuTrace* lt = nullptr;
    if (trace) lt = &trace->layers.emplace_back();
    h = mstgcu_forward(tape, store, layer, h, lt);
  }
  return mean_leading(h);
}

}  // namespace mstgnn
