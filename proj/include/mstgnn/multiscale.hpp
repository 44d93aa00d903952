#pragma once

#include <cstddef>
#include <vector>

#include "mstgnn/autodiff.hpp"

namespace mstgnn {

/// Vertex counts per spatial scale and frame counts per temporal scale.
/// Index 0 is the original resolution; every coarse scale is derived from
/// scale 0 directly.
struct ScaleSpec {
  std::vector<std::size_t> spatial;
  std::vector<std::size_t> temporal;

  /// Spatial counts ceil(M), ceil(M/2), ceil(M/4); temporal lengths T,
  /// floor(T/2), floor(T/3); truncated to the requested number of scales.
  static ScaleSpec make(std::size_t joints, std::size_t frames, std::size_t spatial_scales,
                        std::size_t temporal_scales);
  /// Throws DimensionError unless both lists are non-empty and strictly decreasing.
  void validate() const;
};

/// Psi_{0->r} = softmax_rows(S0 [ReLU(V *_{T0} X)]_13 W), shape [M x M_r].
/// x [T x M x d], v [(2 hops + 1) x d x e], w [(e T) x M_r].
Var spatial_pool_operator(Var x, Var s0, Var t0, Var v, Var w, int temporal_hops);

struct SpatialDownscale {
  Var features;  ///< [T x M_r x d], per frame Psi^T X[t]
  Var graph;     ///< [M_r x M_r], Psi^T S0 Psi
};
SpatialDownscale downscale_spatial(Var x, Var s0, Var psi);

/// Fixed averaging operator [T x T_r]. Frames are grouped in blocks of
/// floor(T / T_r); trailing frames beyond T_r blocks get all-zero rows.
Tensor temporal_pool_operator(std::size_t frames, std::size_t coarse_frames);

/// Duplication operator [T x T_r]: coarse frame j fills its own block of
/// floor(T / T_r) consecutive frames. Trailing frames stay empty.
Tensor temporal_fill_operator(std::size_t frames, std::size_t coarse_frames);

struct TemporalDownscale {
  Var features;  ///< [T_r x M x d], per joint Phi^T X[:, m]
  Var graph;     ///< [T_r x T_r], Phi^T T0 Phi
};
TemporalDownscale downscale_temporal(Var x, Var t0, const Tensor& phi);

struct UnpoolWeights {
  Var fine_filter;    ///< V_0 [(2 hops + 1) x D' x e]
  Var coarse_filter;  ///< V_r [(2 hops + 1) x D' x e]
  Var fine_embed;     ///< Theta_0 [(e T) x k]
  Var coarse_embed;   ///< Theta_r [(e T) x k]
};

/// Psi_{r->0} [M x M_r]: softmax over coarse vertices of inner products
/// between fine and coarse embeddings.
Var spatial_unpool_operator(Var x0, Var xr, Var s0, Var sr, Var t0, const UnpoolWeights& w,
                            int temporal_hops);

struct CoarseSpatial {
  Var features;  ///< X_r [T x M_r x d]
  Var unpool;    ///< Psi_{r->0} [M x M_r]
  Var weight;    ///< W_{r->0} [d x d]
};

/// X_0[t] + sum_r Psi_{r->0} X_r[t] W_{r->0}.
Var cross_scale_spatial_fuse(Var x0, const std::vector<CoarseSpatial>& coarse);

/// X_0 plus every coarse sequence duplicated back to the original length.
Var cross_scale_temporal_fuse(Var x0, const std::vector<Var>& coarse);

}  // namespace mstgnn
