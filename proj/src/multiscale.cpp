#include "mstgnn/multiscale.hpp"

#include <string>

#include "mstgnn/convolution.hpp"

namespace mstgnn {

ScaleSpec ScaleSpec::make(std::size_t joints, std::size_t frames, std::size_t spatial_scales,
                          std::size_t temporal_scales) {
  static constexpr std::size_t kSpatialDivisors[] = {1, 2, 4};
  static constexpr std::size_t kTemporalDivisors[] = {1, 2, 3};
  if (spatial_scales == 0 || spatial_scales > 3 || temporal_scales == 0 || temporal_scales > 3)
    throw DimensionError("scale counts must be between 1 and 3");
  ScaleSpec s;
  for (std::size_t r = 0; r < spatial_scales; ++r)
    s.spatial.push_back((joints + kSpatialDivisors[r] - 1) / kSpatialDivisors[r]);
  for (std::size_t r = 0; r < temporal_scales; ++r) s.temporal.push_back(frames / kTemporalDivisors[r]);
  s.validate();
  return s;
}

void ScaleSpec::validate() const {
  auto check = [](const std::vector<std::size_t>& v, const char* what) {
    if (v.empty() || v.front() == 0) throw DimensionError(std::string(what) + " scales are empty");
    for (std::size_t r = 1; r < v.size(); ++r)
      if (v[r] == 0 || v[r] >= v[r - 1])
        throw DimensionError(std::string(what) + " scale sizes must be positive and strictly decreasing");
  };
  check(spatial, "spatial");
  check(temporal, "temporal");
}

Var spatial_pool_operator(Var x, Var s0, Var t0, Var v, Var w, int temporal_hops) {
  const Var embedded = relu(temporal_graph_conv(x, t0, v, temporal_hops));
  const Var merged = merge_dims_13(embedded);
  if (w.value().rank() != 2 || w.dim(0) != merged.dim(1))
    throw DimensionError("spatial_pool_operator: weights " + shape_string(w.shape()) + " need " +
                         std::to_string(merged.dim(1)) + " rows");
  return softmax_rows(matmul(matmul(s0, merged), w));
}

SpatialDownscale downscale_spatial(Var x, Var s0, Var psi) {
  const Var psi_t = transpose(psi);
  return {frame_left_mul(psi_t, x), matmul(matmul(psi_t, s0), psi)};
}

namespace {

Tensor block_operator(std::size_t frames, std::size_t coarse_frames, double value) {
  if (coarse_frames == 0 || coarse_frames > frames)
    throw DimensionError("temporal pooling from " + std::to_string(frames) + " to " +
                         std::to_string(coarse_frames) + " frames");
  const std::size_t group = frames / coarse_frames;
  Tensor op({frames, coarse_frames});
  for (std::size_t i = 0; i < group * coarse_frames; ++i) op(i, i / group) = value;
  return op;
}

}  // namespace

Tensor temporal_pool_operator(std::size_t frames, std::size_t coarse_frames) {
  if (coarse_frames == 0 || coarse_frames > frames)
    throw DimensionError("temporal pooling from " + std::to_string(frames) + " to " +
                         std::to_string(coarse_frames) + " frames");
  return block_operator(frames, coarse_frames, 1.0 / static_cast<double>(frames / coarse_frames));
}

Tensor temporal_fill_operator(std::size_t frames, std::size_t coarse_frames) {
  return block_operator(frames, coarse_frames, 1.0);
}

TemporalDownscale downscale_temporal(Var x, Var t0, const Tensor& phi) {
  if (phi.rank() != 2 || phi.dim(0) != x.dim(0))
    throw DimensionError("downscale_temporal: operator " + shape_string(phi.shape()) + " for input " +
                         shape_string(x.shape()));
  Tape& tape = *x.tape;
  const Var phi_t = tape.constant(transpose(phi));
  const Var phi_v = tape.constant(phi);
  return {time_left_mul(phi_t, x), matmul(matmul(phi_t, t0), phi_v)};
}

Var spatial_unpool_operator(Var x0, Var xr, Var s0, Var sr, Var t0, const UnpoolWeights& w,
                            int temporal_hops) {
  if (x0.value().rank() != 3 || xr.value().rank() != 3 || x0.dim(0) != xr.dim(0))
    throw DimensionError("spatial_unpool_operator: fine " + shape_string(x0.shape()) + " vs coarse " +
                         shape_string(xr.shape()));
  const Var fine = matmul(matmul(s0, merge_dims_13(relu(temporal_graph_conv(x0, t0, w.fine_filter, temporal_hops)))),
                          w.fine_embed);
  const Var coarse =
      matmul(matmul(sr, merge_dims_13(relu(temporal_graph_conv(xr, t0, w.coarse_filter, temporal_hops)))),
             w.coarse_embed);
  return softmax_rows(matmul(fine, transpose(coarse)));
}

Var cross_scale_spatial_fuse(Var x0, const std::vector<CoarseSpatial>& coarse) {
  Var out = x0;
  for (const auto& c : coarse) {
    if (c.unpool.dim(0) != x0.dim(1) || c.unpool.dim(1) != c.features.dim(1))
      throw DimensionError("cross_scale_spatial_fuse: unpool operator " + shape_string(c.unpool.shape()) +
                           " for coarse features " + shape_string(c.features.shape()));
    if (c.weight.value().rank() != 2 || c.weight.dim(0) != c.features.dim(2) || c.weight.dim(1) != x0.dim(2))
      throw DimensionError("cross_scale_spatial_fuse: weight " + shape_string(c.weight.shape()) +
                           " for feature width " + std::to_string(c.features.dim(2)));
    out = add(out, matmul_last(frame_left_mul(c.unpool, c.features), c.weight));
  }
  return out;
}

Var cross_scale_temporal_fuse(Var x0, const std::vector<Var>& coarse) {
  Var out = x0;
  const std::size_t frames = x0.dim(0);
  for (Var c : coarse) {
    if (c.value().rank() != 3 || c.dim(1) != x0.dim(1) || c.dim(2) != x0.dim(2))
      throw DimensionError("cross_scale_temporal_fuse: coarse " + shape_string(c.shape()) + " for " +
                           shape_string(x0.shape()));
    const Var fill = x0.tape->constant(temporal_fill_operator(frames, c.dim(0)));
    out = add(out, time_left_mul(fill, c));
  }
  return out;
}

}  // namespace mstgnn
