#include "mstgnn/model.hpp"

#include <algorithm>
#include <string>

namespace mstgnn {

void ModelConfig::validate() const {
  skeleton.validate();
  encoder.validate();
  if (horizon == 0) throw DimensionError("prediction horizon must be at least 1");
  ScaleSpec::make(skeleton.joints, encoder.frames, encoder.spatial_scales, encoder.temporal_scales);
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  encoder_ = make_encoder(store_, config_.encoder, config_.skeleton, rng);
  DecoderConfig dc;
  dc.hidden_dim = config_.encoder.hidden_dim();
  dc.readout_dim = std::max<std::size_t>(1, dc.hidden_dim / 2);
  dc.diff_order = config_.encoder.diff_order;
  dc.attention = config_.attention;
  decoder_ = make_decoder(store_, dc, config_.skeleton, rng);
  if (!config_.trainable_graphs)
    for (ParamId id : graph_params()) store_[id].set_trainable(false);
}

std::vector<ParamId> Model::graph_params() const {
  auto ids = encoder_.graph_params();
  const auto d = decoder_.graph_params();
  ids.insert(ids.end(), d.begin(), d.end());
  return ids;
}

Model::Forward Model::forward(Tape& tape, const Tensor& observed, const ForwardOptions& options) {
  const auto& sk = config_.skeleton;
  if (observed.rank() != 3 || observed.dim(0) != config_.encoder.frames || observed.dim(1) != sk.joints ||
      observed.dim(2) != sk.channels)
    throw DimensionError("model expects observed motion [" + std::to_string(config_.encoder.frames) + "x" +
                         std::to_string(sk.joints) + "x" + std::to_string(sk.channels) + "], got " +
                         shape_string(observed.shape()));
  Forward out;
  const Var x = tape.constant(observed);
  out.hidden = encode(tape, store_, encoder_, x, &out.trace);
  for (const auto& layer : out.trace.layers) {
    out.pool_ops.insert(out.pool_ops.end(), layer.pool_ops.begin(), layer.pool_ops.end());
    out.unpool_ops.insert(out.unpool_ops.end(), layer.unpool_ops.begin(), layer.unpool_ops.end());
  }
  RolloutOptions ro;
  ro.horizon = config_.horizon;
  ro.teacher_forcing = options.teacher_forcing;
  ro.truth = options.truth;
  out.prediction = rollout(tape, store_, decoder_, x, out.hidden, ro);
  return out;
}

Tensor Model::predict(const Tensor& observed) {
  Tape tape;
  tape.set_grad_enabled(false);
  return forward(tape, observed).prediction.value();
}

}  // namespace mstgnn
