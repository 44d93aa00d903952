#include "mstgnn/convolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mstgnn/graphs.hpp"

namespace mstgnn {

namespace {

void check_filter(const char* op, Var x, Var w, std::size_t slices) {
  if (x.value().rank() != 3) throw DimensionError(std::string(op) + ": input must be T x M x D");
  if (w.value().rank() != 3 || w.dim(0) != slices || w.dim(1) != x.dim(2))
    throw DimensionError(std::string(op) + ": filter " + shape_string(w.shape()) + " does not provide " +
                         std::to_string(slices) + " hop slices for input " + shape_string(x.shape()));
}

Var apply_filter(Var stacked, Var w) { return matmul_last(stacked, w); }

}  // namespace

Var spatial_graph_conv(Var x, Var s, Var u, int hops) {
  if (hops < 0) throw DimensionError("spatial_graph_conv: negative hop count");
  check_filter("spatial_graph_conv", x, u, static_cast<std::size_t>(hops) + 1);
  if (s.value().rank() != 2 || s.dim(0) != x.dim(1) || s.dim(1) != x.dim(1))
    throw DimensionError("spatial_graph_conv: graph " + shape_string(s.shape()) + " for input " +
                         shape_string(x.shape()));
  std::vector<Var> parts{x};
  if (hops > 0) {
    const auto powers = graph_powers(s, hops);
    for (int l = 1; l <= hops; ++l) parts.push_back(frame_left_mul(powers[l], x));
  }
  return apply_filter(parts.size() == 1 ? x : concat_last(parts), u);
}

Var temporal_graph_conv(Var x, Var t, Var v, int hops) {
  if (hops < 0) throw DimensionError("temporal_graph_conv: negative hop count");
  check_filter("temporal_graph_conv", x, v, 2 * static_cast<std::size_t>(hops) + 1);
  if (t.value().rank() != 2 || t.dim(0) != x.dim(0) || t.dim(1) != x.dim(0))
    throw DimensionError("temporal_graph_conv: graph " + shape_string(t.shape()) + " for input " +
                         shape_string(x.shape()));
  if (hops == 0) return apply_filter(x, v);
  const auto forward = graph_powers(t, hops);
  const auto backward = graph_powers(transpose(t), hops);
  std::vector<Var> parts;
  for (int l = hops; l >= 1; --l) parts.push_back(time_left_mul(backward[l], x));
  parts.push_back(x);
  for (int l = 1; l <= hops; ++l) parts.push_back(time_left_mul(forward[l], x));
  return apply_filter(concat_last(parts), v);
}

Var ss_gc(Var x, Var s, Var u, int hops) { return relu(spatial_graph_conv(x, s, u, hops)); }

Var st_gc(Var x, Var t, Var v, int hops) { return relu(temporal_graph_conv(x, t, v, hops)); }

double decomposition_equivalence_check(const Tensor& x, const Tensor& spatial, const Tensor& temporal) {
  if (x.rank() != 3) throw DimensionError("decomposition check expects T x M x D features");
  const std::size_t T = x.dim(0), M = x.dim(1), D = x.dim(2);

  const Tensor product = cartesian_product(spatial, temporal);
  const Tensor dense = matmul(product, x.reshaped({T * M, D}));

  Tape tape;
  const Var xv = tape.constant(x);
  Tensor u({2, D, D});
  Tensor v({3, D, D});
  for (std::size_t c = 0; c < D; ++c) {
    u(1, c, c) = 1.0;  // hop 1 only
    v(2, c, c) = 1.0;  // hop +1 only
  }
  const Var spatial_shift =
      spatial_graph_conv(xv, tape.constant(spatial), tape.constant(std::move(u)), 1);
  const Var temporal_shift =
      temporal_graph_conv(xv, tape.constant(temporal), tape.constant(std::move(v)), 1);
  const Tensor split = add(spatial_shift, temporal_shift).value().reshaped({T * M, D});
  return max_abs_diff(dense, split);
}

}  // namespace mstgnn
