#include "mstgnn/mstgcu.hpp"

#include <algorithm>
#include <cmath>

#include "mstgnn/convolution.hpp"

namespace mstgnn {

namespace {

struct BlockDims {
  std::size_t spatial_in, spatial_out, temporal_in, temporal_out;
};

BlockDims block_dims(const MstGcuConfig& c) {
  if (c.order == ConvOrder::SpatialFirst) return {c.in_dim, c.out_dim, c.out_dim, c.out_dim};
  return {c.out_dim, c.out_dim, c.in_dim, c.out_dim};
}

std::size_t hop_slices(int hops, bool symmetric) {
  return symmetric ? 2 * static_cast<std::size_t>(hops) + 1 : static_cast<std::size_t>(hops) + 1;
}

Tensor filter(std::size_t slices, std::size_t in, std::size_t out, Rng& rng, double gain = 1.0) {
  return glorot({slices, in, out}, slices * in, out, rng, gain);
}

// Max row sum of every initial graph power, so that each hop term of a
// spatial filter starts at a comparable scale.
std::vector<double> hop_norms(const Tensor& graph, int hops) {
  std::vector<double> norms;
  for (int l = 0; l <= hops; ++l) {
    const Tensor g = graph_power(graph, l);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.dim(0); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < g.dim(1); ++j) row += std::abs(g(i, j));
      worst = std::max(worst, row);
    }
    norms.push_back(worst);
  }
  return norms;
}

Tensor spatial_filter(const std::vector<double>& norms, std::size_t in, std::size_t out, Rng& rng, double gain) {
  Tensor u = filter(norms.size(), in, out, rng, gain);
  const std::size_t slice = in * out;
  for (std::size_t l = 0; l < norms.size(); ++l)
    for (std::size_t k = 0; k < slice; ++k) u[l * slice + k] /= norms[l];
  return u;
}

}  // namespace

MstGcuLayer make_mstgcu_layer(ParameterStore& store, std::size_t index, const MstGcuConfig& config,
                              const SkeletonSpec& skeleton, Rng& rng) {
  config.scales.validate();
  if (config.scales.spatial.front() != skeleton.joints || config.scales.temporal.front() != config.frames)
    throw DimensionError("layer scale 0 does not match the skeleton and frame count");
  MstGcuLayer layer;
  layer.index = index;
  layer.config = config;
  const std::string prefix = "layer" + std::to_string(index) + ".";
  const BlockDims dims = block_dims(config);
  const std::size_t ts = hop_slices(config.temporal_hops, true);
  const std::size_t e = config.embed_dim;
  const std::size_t T = config.frames;

  layer.spatial_graph = store.add(prefix + "spatial_graph", init_spatial(skeleton).adjacency);
  auto temporal = init_temporal_cyclic(T);
  layer.temporal_graph = store.add(prefix + "temporal_graph", temporal.adjacency);
  store[layer.temporal_graph].set_mask(temporal.support);

  const auto& spatial_sizes = config.scales.spatial;
  const auto norms = hop_norms(store[layer.spatial_graph].value(), config.spatial_hops);
  const double relu_gain = 1.0;
  const double fuse_gain = 1.0 / static_cast<double>(spatial_sizes.size());
  for (std::size_t r = 0; r < spatial_sizes.size(); ++r) {
    const std::string s = std::to_string(r);
    layer.spatial_filter.push_back(
        store.add(prefix + "ssgc" + s + ".u", spatial_filter(norms, dims.spatial_in, dims.spatial_out, rng, relu_gain)));
    if (r == 0) continue;
    const std::size_t Mr = spatial_sizes[r];
    layer.pool_filter.push_back(store.add(prefix + "pool" + s + ".v", filter(ts, dims.spatial_in, e, rng)));
    layer.pool_weight.push_back(store.add(prefix + "pool" + s + ".w", glorot({e * T, Mr}, e * T, Mr, rng)));
    layer.unpool_fine_filter.push_back(
        store.add(prefix + "unpool" + s + ".v0", filter(ts, dims.spatial_out, e, rng)));
    layer.unpool_coarse_filter.push_back(
        store.add(prefix + "unpool" + s + ".vr", filter(ts, dims.spatial_out, e, rng)));
    layer.unpool_fine_embed.push_back(
        store.add(prefix + "unpool" + s + ".theta0", glorot({e * T, e}, e * T, e, rng, 0.5)));
    layer.unpool_coarse_embed.push_back(
        store.add(prefix + "unpool" + s + ".thetar", glorot({e * T, e}, e * T, e, rng, 0.5)));
    layer.fuse_weight.push_back(store.add(prefix + "fuse" + s + ".w",
                                          glorot({dims.spatial_out, dims.spatial_out}, dims.spatial_out,
                                                 dims.spatial_out, rng, fuse_gain)));
  }
  // Fusion sums every temporal scale, so each one starts at a share of the gain.
  const double temporal_gain = relu_gain / static_cast<double>(config.scales.temporal.size());
  for (std::size_t r = 0; r < config.scales.temporal.size(); ++r) {
    layer.temporal_filter.push_back(store.add(prefix + "stgc" + std::to_string(r) + ".v",
                                              filter(ts, dims.temporal_in, dims.temporal_out, rng, temporal_gain)));
  }
  if (config.residual && config.in_dim != config.out_dim) {
    layer.residual = store.add(prefix + "residual.w",
                               glorot({config.in_dim, config.out_dim}, config.in_dim, config.out_dim, rng));
  }
  return layer;
}

namespace {

Var spatial_block(Tape& tape, ParameterStore& store, const MstGcuLayer& layer, Var x, Var s0, Var t0,
                  MstGcuTrace* trace) {
  const auto& c = layer.config;
  const auto param = [&](ParamId id) { return tape.parameter(store[id]); };

  std::vector<Var> coarse_in, coarse_graphs;
  for (std::size_t r = 1; r < c.scales.spatial.size(); ++r) {
    const Var psi = spatial_pool_operator(x, s0, t0, param(layer.pool_filter[r - 1]),
                                          param(layer.pool_weight[r - 1]), c.temporal_hops);
    const auto down = downscale_spatial(x, s0, psi);
    coarse_in.push_back(down.features);
    coarse_graphs.push_back(down.graph);
    if (trace) {
      trace->pool_ops.push_back(psi);
      trace->spatial_graphs.push_back(down.graph);
    }
  }

  const Var fine = ss_gc(x, s0, param(layer.spatial_filter[0]), c.spatial_hops);
  std::vector<CoarseSpatial> coarse;
  for (std::size_t r = 1; r < c.scales.spatial.size(); ++r) {
    const Var sr = coarse_graphs[r - 1];
    const Var xr = ss_gc(coarse_in[r - 1], sr, param(layer.spatial_filter[r]), c.spatial_hops);
    const UnpoolWeights w{param(layer.unpool_fine_filter[r - 1]), param(layer.unpool_coarse_filter[r - 1]),
                          param(layer.unpool_fine_embed[r - 1]), param(layer.unpool_coarse_embed[r - 1])};
    const Var unpool = spatial_unpool_operator(fine, xr, s0, sr, t0, w, c.temporal_hops);
    if (trace) trace->unpool_ops.push_back(unpool);
    coarse.push_back({xr, unpool, param(layer.fuse_weight[r - 1])});
  }
  return cross_scale_spatial_fuse(fine, coarse);
}

Var temporal_block(Tape& tape, ParameterStore& store, const MstGcuLayer& layer, Var x, Var t0,
                   MstGcuTrace* trace) {
  const auto& c = layer.config;
  const auto param = [&](ParamId id) { return tape.parameter(store[id]); };
  const Var fine = st_gc(x, t0, param(layer.temporal_filter[0]), c.temporal_hops);
  std::vector<Var> coarse;
  for (std::size_t r = 1; r < c.scales.temporal.size(); ++r) {
    const Tensor phi = temporal_pool_operator(c.frames, c.scales.temporal[r]);
    const auto down = downscale_temporal(x, t0, phi);
    coarse.push_back(st_gc(down.features, down.graph, param(layer.temporal_filter[r]), c.temporal_hops));
    if (trace) {
      trace->temporal_graphs.push_back(down.graph);
      trace->temporal_pool_ops.push_back(phi);
    }
  }
  return cross_scale_temporal_fuse(fine, coarse);
}

}  // namespace

namespace {

Var forward_impl(Tape& tape, ParameterStore& store, const MstGcuLayer& layer, Var x, MstGcuTrace* trace) {
  const auto& c = layer.config;
  if (x.value().rank() != 3 || x.dim(0) != c.frames || x.dim(1) != c.scales.spatial.front() ||
      x.dim(2) != c.in_dim)
    throw DimensionError("input " + shape_string(x.shape()) +
                         " does not match T=" + std::to_string(c.frames) + " M=" +
                         std::to_string(c.scales.spatial.front()) + " D=" + std::to_string(c.in_dim));
  const Var s0 = tape.parameter(store[layer.spatial_graph]);
  const Var t0 = tape.parameter(store[layer.temporal_graph]);

  Var out;
  if (c.order == ConvOrder::SpatialFirst) {
    out = temporal_block(tape, store, layer, spatial_block(tape, store, layer, x, s0, t0, trace), t0, trace);
  } else {
    out = spatial_block(tape, store, layer, temporal_block(tape, store, layer, x, t0, trace), s0, t0, trace);
  }
  if (!c.residual) return out;
  if (layer.residual) return add(out, matmul_last(x, tape.parameter(store[*layer.residual])));
  return add(out, x);
}

}  // namespace

Var mstgcu_forward(Tape& tape, ParameterStore& store, const MstGcuLayer& layer, Var x, MstGcuTrace* trace) {
  const std::string where = "MST-GCU layer " + std::to_string(layer.index) + ": ";
  try {
    return forward_impl(tape, store, layer, x, trace);
  } catch (const DimensionError& e) {
    throw DimensionError(where + e.what());
  } catch (const NumericError& e) {
    throw NumericError(where + e.what());
  }
}

}  // namespace mstgnn
