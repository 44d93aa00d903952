#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "mstgnn/convolution.hpp"
#include "mstgnn/graphs.hpp"
#include "support.hpp"

using namespace mstgnn;
using testing::random_tensor;

namespace {

Tensor eye_stack(std::size_t slices, std::size_t d, std::initializer_list<std::size_t> hot) {
  Tensor w({slices, d, d});
  for (std::size_t s : hot)
    for (std::size_t c = 0; c < d; ++c) w(s, c, c) = 1.0;
  return w;
}

// sum_l S^l x[t] U_l, written out entry by entry.
Tensor spatial_oracle(const Tensor& x, const Tensor& s, const Tensor& u, int hops) {
  const std::size_t T = x.dim(0), M = x.dim(1), D = x.dim(2), Dp = u.dim(2);
  Tensor out({T, M, Dp});
  for (int l = 0; l <= hops; ++l) {
    const Tensor sl = graph_power(s, l);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t o = 0; o < Dp; ++o) {
          double acc = 0.0;
          for (std::size_t j = 0; j < M; ++j)
            for (std::size_t c = 0; c < D; ++c) acc += sl(i, j) * x(t, j, c) * u(l, c, o);
          out(t, i, o) += acc;
        }
  }
  return out;
}

Tensor temporal_oracle(const Tensor& x, const Tensor& tg, const Tensor& v, int hops) {
  const std::size_t T = x.dim(0), M = x.dim(1), D = x.dim(2), Dp = v.dim(2);
  Tensor out({T, M, Dp});
  for (int l = -hops; l <= hops; ++l) {
    const Tensor tl = graph_power(tg, l);
    const std::size_t slice = static_cast<std::size_t>(l + hops);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t i = 0; i < T; ++i)
        for (std::size_t o = 0; o < Dp; ++o) {
          double acc = 0.0;
          for (std::size_t j = 0; j < T; ++j)
            for (std::size_t c = 0; c < D; ++c) acc += tl(i, j) * x(j, m, c) * v(slice, c, o);
          out(i, m, o) += acc;
        }
  }
  return out;
}

Tensor relu_of(Tensor t) {
  for (double& v : t.values()) v = std::max(v, 0.0);
  return t;
}

}  // namespace

TEST_CASE("spatial graph convolution") {
  Tape tape;
  const Tensor x = random_tensor({3, 4, 2}, 1);
  const Var xv = tape.constant(x);
  const Var s = tape.constant(random_tensor({4, 4}, 2));

  CHECK(spatial_graph_conv(xv, s, tape.constant(eye_stack(1, 2, {0})), 0).value() == x);

  const Tensor twice = spatial_graph_conv(xv, tape.constant(Tensor::identity(4)), tape.constant(eye_stack(2, 2, {0, 1})), 1).value();
  CHECK(max_abs_diff(twice, [&] {
          Tensor t = x;
          for (double& v : t.values()) v *= 2.0;
          return t;
        }()) == 0.0);

  const Tensor u = random_tensor({2, 2, 3}, 3);
  const Tensor out = spatial_graph_conv(xv, s, tape.constant(u), 1).value();
  CHECK(max_abs_diff(out, spatial_oracle(x, s.value(), u, 1)) < 1e-12);
  CHECK_THROWS_AS(spatial_graph_conv(xv, s, tape.constant(u), 2), DimensionError);
}

TEST_CASE("temporal graph convolution") {
  Tape tape;
  const std::size_t T = 5;
  const Tensor x = random_tensor({T, 3, 2}, 4);
  const Var xv = tape.constant(x);
  const Var cyc = tape.constant(init_temporal_cyclic(T).adjacency);

  CHECK(temporal_graph_conv(xv, cyc, tape.constant(eye_stack(1, 2, {0})), 0).value() == x);
  CHECK(temporal_graph_conv(xv, cyc, tape.constant(eye_stack(3, 2, {1})), 1).value() == x);

  const Tensor shifted = temporal_graph_conv(xv, cyc, tape.constant(eye_stack(3, 2, {2})), 1).value();
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t c = 0; c < 2; ++c) CHECK(shifted(i, m, c) == x((i + T - 1) % T, m, c));

  const Tensor tg = random_tensor({T, T}, 5);
  const Tensor v = random_tensor({5, 2, 3}, 6);
  const Tensor out = temporal_graph_conv(xv, tape.constant(tg), tape.constant(v), 2).value();
  CHECK(max_abs_diff(out, temporal_oracle(x, tg, v, 2)) < 1e-12);
  CHECK_THROWS_AS(temporal_graph_conv(xv, cyc, tape.constant(v), 1), DimensionError);
}

TEST_CASE("ReLU-wrapped single-scale forms") {
  Tape tape;
  const Tensor x = random_tensor({4, 3, 2}, 7);
  const Tensor s = random_tensor({3, 3}, 8);
  const Tensor u = random_tensor({2, 2, 3}, 9);
  const Tensor ss = ss_gc(tape.constant(x), tape.constant(s), tape.constant(u), 1).value();
  for (double v : ss.values()) CHECK(v >= 0.0);
  CHECK(max_abs_diff(ss, relu_of(spatial_oracle(x, s, u, 1))) < 1e-12);
  CHECK(ss_gc(tape.constant(Tensor({4, 3, 2})), tape.constant(s), tape.constant(u), 1).value() == Tensor({4, 3, 3}));

  const Tensor tg = random_tensor({4, 4}, 10);
  const Tensor v = random_tensor({3, 2, 3}, 11);
  const Tensor st = st_gc(tape.constant(x), tape.constant(tg), tape.constant(v), 1).value();
  for (double val : st.values()) CHECK(val >= 0.0);
  CHECK(max_abs_diff(st, relu_of(temporal_oracle(x, tg, v, 1))) < 1e-12);
  CHECK(st_gc(tape.constant(Tensor({4, 3, 2})), tape.constant(tg), tape.constant(v), 1).value() == Tensor({4, 3, 3}));
}

TEST_CASE("frame and joint independence") {
  Tape tape;
  const std::size_t T = 5, M = 4;
  const Tensor x = random_tensor({T, M, 2}, 12);
  const Tensor s = random_tensor({M, M}, 13);
  const Tensor u = random_tensor({2, 2, 3}, 14);
  const Tensor tg = random_tensor({T, T}, 15);
  const Tensor v = random_tensor({3, 2, 3}, 16);

  std::vector<std::size_t> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[0], perm[2]);

  const auto permute_frames = [&](const Tensor& a) {
    Tensor out(a.shape());
    const std::size_t block = a.size() / T;
    for (std::size_t t = 0; t < T; ++t)
      std::copy_n(a.data() + perm[t] * block, block, out.data() + t * block);
    return out;
  };
  const Tensor direct = spatial_graph_conv(tape.constant(x), tape.constant(s), tape.constant(u), 1).value();
  const Tensor via = spatial_graph_conv(tape.constant(permute_frames(x)), tape.constant(s), tape.constant(u), 1).value();
  CHECK(max_abs_diff(via, permute_frames(direct)) < 1e-12);

  // Reversing the joint order commutes with the temporal convolution.
  const auto flip_joints = [&](const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t t = 0; t < a.dim(0); ++t)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t c = 0; c < a.dim(2); ++c) out(t, m, c) = a(t, M - 1 - m, c);
    return out;
  };
  const Tensor tdirect = temporal_graph_conv(tape.constant(x), tape.constant(tg), tape.constant(v), 1).value();
  const Tensor tvia = temporal_graph_conv(tape.constant(flip_joints(x)), tape.constant(tg), tape.constant(v), 1).value();
  CHECK(max_abs_diff(tvia, flip_joints(tdirect)) < 1e-12);
}

TEST_CASE("linearity in the features") {
  Tape tape;
  const Tensor x = random_tensor({4, 3, 2}, 17);
  const Tensor y = random_tensor({4, 3, 2}, 18);
  const Var s = tape.constant(random_tensor({3, 3}, 19));
  const Var u = tape.constant(random_tensor({2, 2, 2}, 20));
  const Var tg = tape.constant(random_tensor({4, 4}, 21));
  const Var v = tape.constant(random_tensor({5, 2, 2}, 22));
  const double a = 0.7, b = -1.3;
  const Var mix = add(affine(tape.constant(x), a, 0.0), affine(tape.constant(y), b, 0.0));

  const auto check = [&](auto&& f) {
    const Tensor lhs = f(mix).value();
    const Tensor rhs = add(affine(f(tape.constant(x)), a, 0.0), affine(f(tape.constant(y)), b, 0.0)).value();
    CHECK(max_abs_diff(lhs, rhs) < 1e-10);
  };
  check([&](Var z) { return spatial_graph_conv(z, s, u, 1); });
  check([&](Var z) { return temporal_graph_conv(z, tg, v, 2); });
}

TEST_CASE("decomposition of the product-graph shift") {
  Rng rng(23);
  const Tensor x = random_tensor({5, 4, 3}, rng);
  const Tensor s = random_tensor({4, 4}, rng);
  const Tensor t = random_tensor({5, 5}, rng);
  CHECK(decomposition_equivalence_check(x, s, t) < 1e-10);
  CHECK(decomposition_equivalence_check(x, Tensor({4, 4}), t) < 1e-10);
  CHECK(decomposition_equivalence_check(x, s, Tensor({5, 5})) < 1e-10);

  // With S = 0 the dense shift is the temporal shift alone.
  const Tensor dense = matmul(cartesian_product(Tensor({4, 4}), t), x.reshaped({20, 3}));
  Tape tape;
  Tensor v({3, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) v(2, c, c) = 1.0;
  const Tensor only_t = temporal_graph_conv(tape.constant(x), tape.constant(t), tape.constant(v), 1).value();
  CHECK(max_abs_diff(dense, only_t.reshaped({20, 3})) < 1e-12);
}
