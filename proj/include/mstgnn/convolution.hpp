#pragma once

#include "mstgnn/autodiff.hpp"

namespace mstgnn {

/// Per-frame hop-summed filtering: out[t] = sum_{l=0..hops} S^l x[t] U_l.
/// x [T x M x D], s [M x M], u [(hops+1) x D x D'] -> [T x M x D'].
Var spatial_graph_conv(Var x, Var s, Var u, int hops);

/// Per-joint filtering over frames: out[:, m] = sum_{l=-hops..hops} T^l x[:, m] V_l
/// with T^-l := (T^T)^l. x [T x M x D], t [T x T], v [(2 hops + 1) x D x D'].
/// Slice k of v belongs to hop k - hops.
Var temporal_graph_conv(Var x, Var t, Var v, int hops);

/// ReLU(spatial_graph_conv).
Var ss_gc(Var x, Var s, Var u, int hops);
/// ReLU(temporal_graph_conv).
Var st_gc(Var x, Var t, Var v, int hops);

/// Max abs difference between one shift on the dense product graph applied
/// to the flattened features and the sum of a one-hop spatial shift and a
/// one-hop temporal shift computed through the convolution operators.
double decomposition_equivalence_check(const Tensor& x, const Tensor& spatial, const Tensor& temporal);

}  // namespace mstgnn
