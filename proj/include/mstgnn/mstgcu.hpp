#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mstgnn/autodiff.hpp"
#include "mstgnn/graphs.hpp"
#include "mstgnn/multiscale.hpp"
#include "mstgnn/random.hpp"

namespace mstgnn {

enum class ConvOrder { SpatialFirst, TemporalFirst };

struct MstGcuConfig {
  std::size_t in_dim = 64;
  std::size_t out_dim = 64;
  std::size_t frames = 10;
  ScaleSpec scales;
  int spatial_hops = 1;
  int temporal_hops = 4;
  std::size_t embed_dim = 16;  ///< channel width of the pooling/unpooling embeddings
  ConvOrder order = ConvOrder::SpatialFirst;
  bool residual = true;
};

/// Parameter ids of one multiscale spatio-temporal unit. Every layer owns
/// its own graphs and weights.
struct MstGcuLayer {
  std::size_t index = 0;
  MstGcuConfig config;

  ParamId spatial_graph = 0;   ///< S_0 [M x M]
  ParamId temporal_graph = 0;  ///< T_0 [T x T], masked to the cyclic support

  // Per coarse spatial scale r = 1..R-1 (vector index r - 1).
  std::vector<ParamId> pool_filter;     ///< V [(2Lt+1) x d x e]
  std::vector<ParamId> pool_weight;     ///< W_{0->r} [(e T) x M_r]
  std::vector<ParamId> unpool_fine_filter;
  std::vector<ParamId> unpool_coarse_filter;
  std::vector<ParamId> unpool_fine_embed;
  std::vector<ParamId> unpool_coarse_embed;
  std::vector<ParamId> fuse_weight;     ///< W_{r->0} [D' x D']

  // Per scale including scale 0.
  std::vector<ParamId> spatial_filter;   ///< U [(Ls+1) x d x D']
  std::vector<ParamId> temporal_filter;  ///< V [(2Lt+1) x d x D']

  std::optional<ParamId> residual;  ///< [D_in x D_out] when the widths differ

  std::vector<ParamId> graph_params() const { return {spatial_graph, temporal_graph}; }
};

/// Registers the parameters of one layer under the prefix "layer<index>.".
MstGcuLayer make_mstgcu_layer(ParameterStore& store, std::size_t index, const MstGcuConfig& config,
                              const SkeletonSpec& skeleton, Rng& rng);

/// Intermediate operators of one forward pass, for losses and inspection.
struct MstGcuTrace {
  std::vector<Var> pool_ops;        ///< Psi_{0->r}
  std::vector<Var> unpool_ops;      ///< Psi_{r->0}
  std::vector<Var> spatial_graphs;  ///< S_r, r >= 1
  std::vector<Var> temporal_graphs; ///< T_r, r >= 1
  std::vector<Tensor> temporal_pool_ops;  ///< Phi_{0->r}
};

/// x [T x M x D_in] -> [T x M x D_out].
Var mstgcu_forward(Tape& tape, ParameterStore& store, const MstGcuLayer& layer, Var x,
                   MstGcuTrace* trace = nullptr);

}  // namespace mstgnn
