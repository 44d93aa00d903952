#include "mstgnn/graphs.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace mstgnn {

void SkeletonSpec::validate() const {
  if (joints == 0) throw ParseError("skeleton has no joints");
  if (channels == 0) throw ParseError("skeleton has no channels");
  for (const auto& [i, j] : edges) {
    if (i >= joints || j >= joints)
      throw ParseError("edge " + std::to_string(i) + "-" + std::to_string(j) + " references a joint >= " +
                       std::to_string(joints));
    if (i == j) throw ParseError("self-edge on joint " + std::to_string(i));
  }
}

SkeletonSpec SkeletonSpec::chain(std::size_t joints, std::size_t channels) {
  SkeletonSpec s;
  s.joints = joints;
  s.channels = channels;
  for (std::size_t j = 1; j < joints; ++j) s.edges.emplace_back(j - 1, j);
  return s;
}

SkeletonSpec parse_skeleton(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  SkeletonSpec s;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long long a = -1, b = -1;
    std::string extra;
    if (!(ls >> a >> b) || (ls >> extra) || a < 0 || b < 0)
      throw ParseError("skeleton line " + std::to_string(lineno) + ": expected two non-negative integers");
    if (!have_header) {
      s.joints = static_cast<std::size_t>(a);
      s.channels = static_cast<std::size_t>(b);
      have_header = true;
    } else {
      s.edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }
  if (!have_header) throw ParseError("skeleton: missing \"M C\" header");
  s.validate();
  return s;
}

SkeletonSpec load_skeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open skeleton file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_skeleton(buf.str());
}

void save_skeleton(const SkeletonSpec& skeleton, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write skeleton file " + path.string());
  out << skeleton.joints << ' ' << skeleton.channels << '\n';
  for (const auto& [i, j] : skeleton.edges) out << i << ' ' << j << '\n';
}

SpatialGraph init_spatial(const SkeletonSpec& skeleton) {
  skeleton.validate();
  const std::size_t M = skeleton.joints;
  Tensor a({M, M});
  for (std::size_t i = 0; i < M; ++i) a(i, i) = 1.0;
  for (const auto& [i, j] : skeleton.edges) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return {std::move(a), 0};
}

TemporalGraph init_temporal_cyclic(std::size_t frames) {
  if (frames < 2) throw DimensionError("temporal graph needs at least 2 frames, got " + std::to_string(frames));
  Tensor a({frames, frames});
  for (std::size_t j = 0; j < frames; ++j) a((j + 1) % frames, j) = 1.0;
  Tensor support = a;
  return {std::move(a), std::move(support)};
}

Tensor graph_power(const Tensor& g, int hops) {
  if (g.rank() != 2 || g.dim(0) != g.dim(1))
    throw DimensionError("graph_power: non-square " + shape_string(g.shape()));
  const Tensor base = hops < 0 ? transpose(g) : g;
  Tensor out = Tensor::identity(g.dim(0));
  for (int k = 0; k < (hops < 0 ? -hops : hops); ++k) out = matmul(out, base);
  return out;
}

Var graph_power(Var g, int hops) {
  if (g.value().rank() != 2 || g.dim(0) != g.dim(1))
    throw DimensionError("graph_power: non-square " + shape_string(g.shape()));
  if (hops == 0) return g.tape->constant(Tensor::identity(g.dim(0)));
  const Var base = hops < 0 ? transpose(g) : g;
  Var out = base;
  for (int k = 1; k < (hops < 0 ? -hops : hops); ++k) out = matmul(out, base);
  return out;
}

std::vector<Var> graph_powers(Var g, int max_hop) {
  if (g.value().rank() != 2 || g.dim(0) != g.dim(1))
    throw DimensionError("graph_powers: non-square " + shape_string(g.shape()));
  if (max_hop < 0) throw DimensionError("graph_powers: negative hop bound");
  std::vector<Var> out{g.tape->constant(Tensor::identity(g.dim(0)))};
  for (int k = 1; k <= max_hop; ++k) out.push_back(k == 1 ? g : matmul(out.back(), g));
  return out;
}

Tensor cartesian_product(const Tensor& spatial, const Tensor& temporal) {
  if (spatial.rank() != 2 || spatial.dim(0) != spatial.dim(1) || temporal.rank() != 2 ||
      temporal.dim(0) != temporal.dim(1))
    throw DimensionError("cartesian_product expects square matrices");
  const std::size_t M = spatial.dim(0), T = temporal.dim(0);
  Tensor a({T * M, T * M});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t row = t * M + m;
      for (std::size_t m2 = 0; m2 < M; ++m2) a(row, t * M + m2) += spatial(m, m2);
      for (std::size_t t2 = 0; t2 < T; ++t2) a(row, t2 * M + m) += temporal(t, t2);
    }
  return a;
}

}  // namespace mstgnn
