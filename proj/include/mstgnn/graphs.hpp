#pragma once

#include <cstddef>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "mstgnn/autodiff.hpp"
#include "mstgnn/tensor.hpp"

namespace mstgnn {

/// Kinematic tree of a dataset: joint count, channels per joint, bones.
struct SkeletonSpec {
  std::size_t joints = 0;
  std::size_t channels = 3;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  /// Throws ParseError on out-of-range joints or self-edges.
  void validate() const;

  /// 0-1, 1-2, ..., (M-2)-(M-1).
  static SkeletonSpec chain(std::size_t joints, std::size_t channels = 3);

  friend bool operator==(const SkeletonSpec&, const SkeletonSpec&) = default;
};

/// Text format: first line "M C", then one "i j" pair per line (0-indexed).
/// Blank lines and lines starting with '#' are ignored.
SkeletonSpec parse_skeleton(std::string_view text);
SkeletonSpec load_skeleton(const std::filesystem::path& path);
void save_skeleton(const SkeletonSpec& skeleton, const std::filesystem::path& path);

struct SpatialGraph {
  Tensor adjacency;
  std::size_t scale = 0;
};

/// Temporal adjacency plus the support pattern of its trainable entries
/// (1 = trainable, 0 = frozen at exactly zero).
struct TemporalGraph {
  Tensor adjacency;
  Tensor support;
};

/// Symmetric 0/1 adjacency with self-loops.
SpatialGraph init_spatial(const SkeletonSpec& skeleton);

/// Cyclic one-step shift: adjacency[i][j] = 1 iff i == (j + 1) mod T.
TemporalGraph init_temporal_cyclic(std::size_t frames);

/// g^hops for hops >= 0; (g^T)^|hops| for negative hops.
Tensor graph_power(const Tensor& g, int hops);
Var graph_power(Var g, int hops);

/// Powers g^0 .. g^max_hop, sharing intermediate products.
std::vector<Var> graph_powers(Var g, int max_hop);

/// Kronecker sum of a spatial [M x M] and temporal [T x T] adjacency over
/// vertices ordered t * M + m, i.e. kron(I_T, S) + kron(T, I_M). Used as a
/// dense reference only.
Tensor cartesian_product(const Tensor& spatial, const Tensor& temporal);

}  // namespace mstgnn
