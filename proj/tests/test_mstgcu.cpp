#include "doctest.h"
#include "mstgnn/convolution.hpp"
#include "mstgnn/mstgcu.hpp"
#include "support.hpp"

using namespace mstgnn;
using testing::random_tensor;

namespace {

MstGcuConfig small_config(std::size_t in, std::size_t out, std::size_t rs, std::size_t rt) {
  MstGcuConfig c;
  c.in_dim = in;
  c.out_dim = out;
  c.frames = 6;
  c.scales = ScaleSpec::make(5, 6, rs, rt);
  c.spatial_hops = 1;
  c.temporal_hops = 2;
  c.embed_dim = 3;
  return c;
}

Tensor run(ParameterStore& store, const MstGcuLayer& layer, const Tensor& x, MstGcuTrace* trace = nullptr) {
  Tape tape;
  return mstgcu_forward(tape, store, layer, tape.constant(x), trace).value();
}

}  // namespace

TEST_CASE("zero weights leave only the residual") {
  ParameterStore store;
  Rng rng(1);
  const auto layer = make_mstgcu_layer(store, 0, small_config(4, 4, 3, 3), SkeletonSpec::chain(5), rng);
  for (auto& p : store)
    if (p.name() != store[layer.spatial_graph].name() && p.name() != store[layer.temporal_graph].name())
      for (double& v : p.value().values()) v = 0.0;
  const Tensor x = random_tensor({6, 5, 4}, 2);
  CHECK(run(store, layer, x) == x);
}

TEST_CASE("output shapes for every order and width") {
  for (ConvOrder order : {ConvOrder::SpatialFirst, ConvOrder::TemporalFirst})
    for (auto [in, out] : {std::pair<std::size_t, std::size_t>{4, 4}, {4, 7}, {7, 2}}) {
      ParameterStore store;
      Rng rng(3);
      auto config = small_config(in, out, 3, 3);
      config.order = order;
      const auto layer = make_mstgcu_layer(store, 2, config, SkeletonSpec::chain(5), rng);
      CHECK(layer.residual.has_value() == (in != out));
      MstGcuTrace trace;
      const Tensor y = run(store, layer, random_tensor({6, 5, in}, 4), &trace);
      CHECK(y.shape() == Shape{6, 5, out});
      CHECK(trace.pool_ops.size() == 2);
      CHECK(trace.unpool_ops.size() == 2);
      CHECK(trace.temporal_pool_ops.size() == 2);
      CHECK((store.find("layer2.residual.w") != nullptr) == (in != out));
    }
}

TEST_CASE("parameters are layer-local and the temporal graph is masked") {
  ParameterStore store;
  Rng rng(5);
  const auto a = make_mstgcu_layer(store, 0, small_config(4, 4, 2, 2), SkeletonSpec::chain(5), rng);
  const auto b = make_mstgcu_layer(store, 1, small_config(4, 4, 2, 2), SkeletonSpec::chain(5), rng);
  CHECK(a.spatial_graph != b.spatial_graph);
  CHECK(a.temporal_graph != b.temporal_graph);
  const Parameter& t0 = store[a.temporal_graph];
  REQUIRE(t0.mask().has_value());
  CHECK(*t0.mask() == init_temporal_cyclic(6).support);
  CHECK(t0.value() == init_temporal_cyclic(6).adjacency);
  CHECK(store[a.spatial_graph].value() == init_spatial(SkeletonSpec::chain(5)).adjacency);
}

TEST_CASE("a single scale reduces to SS-GC, ST-GC and the residual") {
  ParameterStore store;
  Rng rng(6);
  const auto layer = make_mstgcu_layer(store, 0, small_config(3, 3, 1, 1), SkeletonSpec::chain(5), rng);
  CHECK(layer.pool_weight.empty());
  const Tensor x = random_tensor({6, 5, 3}, 7);

  Tape tape;
  const Var xv = tape.constant(x);
  const Var s = ss_gc(xv, tape.constant(store[layer.spatial_graph].value()),
                      tape.constant(store[layer.spatial_filter[0]].value()), 1);
  const Var t = st_gc(s, tape.constant(store[layer.temporal_graph].value()),
                      tape.constant(store[layer.temporal_filter[0]].value()), 2);
  const Tensor expected = add(t, xv).value();
  CHECK(max_abs_diff(run(store, layer, x), expected) < 1e-14);
}

TEST_CASE("removing the residual changes the output") {
  const Tensor x = random_tensor({6, 5, 4}, 8);
  ParameterStore with_store, without_store;
  Rng r1(9), r2(9);
  auto config = small_config(4, 4, 3, 3);
  const auto with = make_mstgcu_layer(with_store, 0, config, SkeletonSpec::chain(5), r1);
  config.residual = false;
  const auto without = make_mstgcu_layer(without_store, 0, config, SkeletonSpec::chain(5), r2);
  const Tensor a = run(with_store, with, x);
  const Tensor b = run(without_store, without, x);
  CHECK(max_abs_diff(a, b) > 1e-3);
  Tape tape;
  CHECK(max_abs_diff(a, add(tape.constant(b), tape.constant(x)).value()) < 1e-14);
}

TEST_CASE("input shape errors carry layer context") {
  ParameterStore store;
  Rng rng(10);
  const auto layer = make_mstgcu_layer(store, 3, small_config(4, 4, 2, 2), SkeletonSpec::chain(5), rng);
  try {
    run(store, layer, Tensor({6, 5, 5}));
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("layer 3") != std::string::npos);
  }
}
