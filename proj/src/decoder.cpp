#include "mstgnn/decoder.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "mstgnn/encoder.hpp"

namespace mstgnn {

namespace {

AffineMap make_affine(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                      double gain = 1.0) {
  AffineMap m;
  m.weight = store.add(name + ".w", glorot({in, out}, in, out, rng, gain));
  m.bias = store.add(name + ".b", Tensor({out}));
  return m;
}

Var apply(Tape& tape, ParameterStore& store, const AffineMap& m, Var x) {
  return add_row(matmul(x, tape.parameter(store[m.weight])), tape.parameter(store[m.bias]));
}

}  // namespace

Decoder make_decoder(ParameterStore& store, const DecoderConfig& config, const SkeletonSpec& skeleton, Rng& rng) {
  skeleton.validate();
  if (config.hidden_dim == 0 || config.readout_dim == 0) throw DimensionError("decoder widths must be positive");
  if (config.diff_order < 0) throw DimensionError("difference order must be non-negative");
  Decoder dec;
  dec.config = config;
  dec.joints = skeleton.joints;
  dec.channels = skeleton.channels;
  const std::size_t din = dec.input_dim(), dh = config.hidden_dim;
  auto& p = dec.params;
  p.input_graph = store.add("decoder.input_graph", init_spatial(skeleton).adjacency);
  p.hidden_graph = store.add("decoder.hidden_graph", init_spatial(skeleton).adjacency);
  p.input_att_w = store.add("decoder.input_att.w", glorot({din, din}, din, din, rng));
  p.input_att_u = store.add("decoder.input_att.u", glorot({din, 1}, din, 1, rng));
  p.hidden_att_w = store.add("decoder.hidden_att.w", glorot({dh, dh}, dh, dh, rng));
  p.hidden_att_u = store.add("decoder.hidden_att.u", glorot({dh, 1}, dh, 1, rng));
  p.reset_in = make_affine(store, "decoder.reset_in", din, dh, rng);
  p.reset_h = make_affine(store, "decoder.reset_h", dh, dh, rng);
  p.update_in = make_affine(store, "decoder.update_in", din, dh, rng);
  p.update_h = make_affine(store, "decoder.update_h", dh, dh, rng);
  p.cand_in = make_affine(store, "decoder.cand_in", din, dh, rng);
  p.cand_h = make_affine(store, "decoder.cand_h", dh, dh, rng);
  p.readout_hidden = make_affine(store, "decoder.readout1", dh, config.readout_dim, rng);
  p.readout_out = make_affine(store, "decoder.readout2", config.readout_dim, dec.channels, rng, 0.1);
  return dec;
}

Var attention_scores(Var z, Var graph, Var w, Var u) {
  return sigmoid(matmul(relu(matmul(matmul(graph, z), w)), u));
}

Var attention_gate(Var z, Var graph, Var w, Var u) { return scale_rows(z, attention_scores(z, graph, w, u)); }

GaGruStep ga_gru_cell(Tape& tape, ParameterStore& store, const Decoder& decoder, Var input, Var hidden) {
  const auto& p = decoder.params;
  const auto param = [&](ParamId id) { return tape.parameter(store[id]); };
  if (input.value().rank() != 2 || input.dim(0) != decoder.joints || input.dim(1) != decoder.input_dim())
    throw DimensionError("ga_gru_cell: input " + shape_string(input.shape()) + ", expected [" +
                         std::to_string(decoder.joints) + "x" + std::to_string(decoder.input_dim()) + "]");
  if (hidden.value().rank() != 2 || hidden.dim(0) != decoder.joints || hidden.dim(1) != decoder.config.hidden_dim)
    throw DimensionError("ga_gru_cell: state " + shape_string(hidden.shape()));

  Var in_att = input, h_att = hidden;
  if (decoder.config.attention == AttentionMode::Graph) {
    in_att = attention_gate(input, param(p.input_graph), param(p.input_att_w), param(p.input_att_u));
    h_att = attention_gate(hidden, param(p.hidden_graph), param(p.hidden_att_w), param(p.hidden_att_u));
  }
  GaGruStep step;
  step.reset = sigmoid(add(apply(tape, store, p.reset_in, in_att), apply(tape, store, p.reset_h, h_att)));
  step.update = sigmoid(add(apply(tape, store, p.update_in, in_att), apply(tape, store, p.update_h, h_att)));
  step.candidate =
      tanh(add(apply(tape, store, p.cand_in, in_att), mul(step.reset, apply(tape, store, p.cand_h, h_att))));
  step.hidden = add(mul(step.update, hidden), mul(affine(step.update, -1.0, 1.0), step.candidate));
  return step;
}

Var readout(Tape& tape, ParameterStore& store, const Decoder& decoder, Var hidden) {
  const auto& p = decoder.params;
  return apply(tape, store, p.readout_out, tanh(apply(tape, store, p.readout_hidden, hidden)));
}

Var rollout(Tape& tape, ParameterStore& store, const Decoder& decoder, Var history, Var initial_hidden,
            const RolloutOptions& options) {
  const std::size_t window = static_cast<std::size_t>(decoder.config.diff_order) + 1;
  if (options.horizon == 0) throw DimensionError("rollout horizon must be at least 1");
  if (history.value().rank() != 3 || history.dim(0) < window || history.dim(1) != decoder.joints ||
      history.dim(2) != decoder.channels)
    throw DimensionError("rollout: history " + shape_string(history.shape()) + " needs at least " +
                         std::to_string(window) + " frames of " + std::to_string(decoder.joints) + "x" +
                         std::to_string(decoder.channels));
  if (options.teacher_forcing) {
    if (!options.truth || options.truth->rank() != 3 || options.truth->dim(0) < options.horizon)
      throw DimensionError("teacher forcing needs ground truth covering the horizon");
  }

  std::deque<Var> buffer;
  for (std::size_t k = history.dim(0) - window; k < history.dim(0); ++k) buffer.push_back(slice_leading(history, k));

  Var hidden = initial_hidden;
  std::vector<Var> predictions;
  for (std::size_t step = 0; step < options.horizon; ++step) {
    const Var frames = stack_leading(std::vector<Var>(buffer.begin(), buffer.end()));
    const Var input = slice_leading(diff_features(frames, decoder.config.diff_order), window - 1);
    hidden = ga_gru_cell(tape, store, decoder, input, hidden).hidden;
    const Var next = add(buffer.back(), readout(tape, store, decoder, hidden));
    for (double v : next.value().values())
      if (std::abs(v) > options.divergence_limit)
        throw NumericError("rollout diverged at step " + std::to_string(step + 1) + " (|value| > " +
                           std::to_string(options.divergence_limit) + ")");
    predictions.push_back(next);
    buffer.pop_front();
    if (options.teacher_forcing) {
      const Tensor& truth = *options.truth;
      const std::size_t block = decoder.joints * decoder.channels;
      std::vector<double> frame(truth.data() + step * block, truth.data() + (step + 1) * block);
      buffer.push_back(tape.constant(Tensor({decoder.joints, decoder.channels}, std::move(frame))));
    } else {
      buffer.push_back(next);
    }
  }
  return stack_leading(predictions);
}

}  // namespace mstgnn
