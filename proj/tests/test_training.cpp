#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mstgnn/data.hpp"
#include "mstgnn/training.hpp"
#include "support.hpp"

using namespace mstgnn;
using testing::random_tensor;

namespace {

ModelConfig small_model(std::uint64_t seed = 3) {
  ModelConfig c;
  c.skeleton = SkeletonSpec::chain(6);
  c.encoder.frames = 10;
  c.encoder.initial_dim = 8;
  c.encoder.layer_dims = {8, 16};
  c.encoder.embed_dim = 4;
  c.horizon = 5;
  c.seed = seed;
  return c;
}

std::vector<WindowPair> overfit_window() {
  SynthOptions o;
  o.frames = 15;
  o.seed = 7;
  return extract_windows(synth_generate(o), 10, 5, 1);
}

std::vector<Tensor> snapshot(const ParameterStore& store) {
  std::vector<Tensor> out;
  for (const auto& p : store) out.push_back(p.value());
  return out;
}

}  // namespace

TEST_CASE("global norm clipping") {
  Tensor small({2}, {0.15, 0.2});
  CHECK(clip_global_norm({&small}, 0.5) == doctest::Approx(0.25));
  CHECK(small == Tensor({2}, {0.15, 0.2}));

  Tensor g({2}, {3.0, 4.0});
  CHECK(clip_global_norm({&g}, 0.5) == 5.0);
  CHECK(max_abs_diff(g, Tensor({2}, {0.3, 0.4})) < 1e-16);

  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_tensor({7, 3}, rng, -5.0, 5.0), b = random_tensor({11}, rng, -5.0, 5.0);
    clip_global_norm({&a, &b}, 0.5);
    CHECK(global_norm({&a, &b}) <= 0.5 + 1e-12);
  }

  Tensor bad({1}, {1.0});
  bad[0] = std::nan("");
  CHECK_THROWS_AS(global_norm({&bad}), NumericError);
}

TEST_CASE("per-tensor clipping") {
  Tensor a({2}, {3.0, 4.0}), b({1}, {0.1});
  clip_per_tensor({&a, &b}, 1.0);
  CHECK(max_abs_diff(a, Tensor({2}, {0.6, 0.8})) < 1e-15);
  CHECK(b[0] == 0.1);
}

TEST_CASE("Adam first step and zero gradients") {
  TrainConfig config;
  ParameterStore store;
  const ParamId id = store.add("x", Tensor({1}, {1.0}));

  store[id].grad() = Tensor({1}, {1.0});  // d/dx of f(x) = x
  Adam adam;
  adam.step(store, config);
  CHECK(std::abs((1.0 - store[id].value()[0]) - config.learning_rate) < 1e-10);
  const double m = adam.first_moments()[id][0], v = adam.second_moments()[id][0];

  store[id].grad() = Tensor({1}, {0.0});
  const double before = store[id].value()[0];
  Adam fresh;
  ParameterStore idle;
  const ParamId k = idle.add("y", Tensor({1}, {2.0}));
  idle[k].grad() = Tensor({1}, {0.0});
  fresh.step(idle, config);
  CHECK(idle[k].value()[0] == 2.0);

  adam.step(store, config);
  CHECK(adam.first_moments()[id][0] == doctest::Approx(config.beta1 * m).epsilon(1e-15));
  CHECK(adam.second_moments()[id][0] == doctest::Approx(config.beta2 * v).epsilon(1e-15));
  CHECK(store[id].value()[0] < before);  // momentum still moves it
  CHECK(adam.steps() == 2);
}

TEST_CASE("Adam converges on a quadratic") {
  TrainConfig config;
  config.learning_rate = 1e-2;
  ParameterStore store;
  const ParamId id = store.add("p", Tensor({2}, {3.0, -2.0}));
  const double target[2] = {0.5, 1.5};
  Adam adam;
  for (int step = 0; step < 5000; ++step) {
    Tensor& x = store[id].value();
    store[id].grad() = Tensor({2}, {2.0 * (x[0] - target[0]), 8.0 * (x[1] - target[1])});
    adam.step(store, config);
  }
  CHECK(std::abs(store[id].value()[0] - target[0]) < 1e-3);
  CHECK(std::abs(store[id].value()[1] - target[1]) < 1e-3);
}

TEST_CASE("Adam keeps masked entries at zero and skips frozen parameters") {
  TrainConfig config;
  config.learning_rate = 0.1;
  ParameterStore store;
  const ParamId id = store.add("t", Tensor({2, 2}, 1.0));
  store[id].set_mask(Tensor::matrix({{0, 1}, {1, 0}}));
  const ParamId frozen = store.add("f", Tensor({1}, {4.0}));
  store[frozen].set_trainable(false);
  Adam adam;
  for (int step = 0; step < 100; ++step) {
    store[id].grad() = Tensor({2, 2}, {1.0, -1.0, 2.0, 3.0});
    store[frozen].grad() = Tensor({1}, {1.0});
    adam.step(store, config);
  }
  CHECK(store[id].value()(0, 0) == 0.0);
  CHECK(store[id].value()(1, 1) == 0.0);
  CHECK(store[id].value()(0, 1) > 1.0);
  CHECK(store[frozen].value()[0] == 4.0);
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.clip_norm = 0.0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.learning_rate = -1.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Model model(small_model());
  const auto before = snapshot(model.params());
  TrainConfig config;
  config.learning_rate = 0.0;
  Trainer trainer(model, config);
  trainer.run_epoch(overfit_window());
  CHECK(snapshot(model.params()) == before);
}

TEST_CASE("training loss falls on the single-sequence task") {
  Model model(small_model());
  TrainConfig config;
  config.learning_rate = 3e-3;
  config.batch_size = 16;
  config.epochs = 50;
  Trainer trainer(model, config);
  SynthOptions o;
  o.seed = 7;
  const auto windows = extract_windows(synth_generate(o), 10, 5, 1);
  const auto log = trainer.train(windows, nullptr);
  REQUIRE(log.size() == 50);
  CHECK(log.back().step == 50 * ((windows.size() + 15) / 16));
  CHECK(log.back().total < log.front().total / 10.0);

  // Monotone within noise: no epoch exceeds the running best by more than half.
  double best = log.front().total;
  for (const auto& m : log) {
    CHECK(m.total <= 1.5 * best);
    best = std::min(best, m.total);
  }
}

TEST_CASE("metrics log format and determinism") {
  SynthOptions o;
  o.frames = 40;
  o.seed = 11;
  const auto windows = extract_windows(synth_generate(o), 10, 5, 3);
  const auto run = [&] {
    Model model(small_model(5));
    TrainConfig config;
    config.batch_size = 4;
    config.epochs = 2;
    config.seed = 5;
    Trainer trainer(model, config);
    std::ostringstream log;
    trainer.train(windows, &log);
    return log.str();
  };
  const std::string a = run();
  CHECK(a == run());
  CHECK(a.rfind("epoch,step,l_pred,l_gram,l_ent,total,mae\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 3);
}

TEST_CASE("divergence guard stops training") {
  Model model(small_model());
  auto windows = overfit_window();
  for (double& v : windows[0].future.values()) v = 1e8;
  Trainer trainer(model, TrainConfig{});
  CHECK_THROWS_AS(trainer.run_epoch(windows), NumericError);
}

TEST_CASE("fixed graphs stay fixed") {
  ModelConfig mc = small_model();
  mc.trainable_graphs = false;
  Model model(mc);
  std::vector<Tensor> graphs;
  for (ParamId id : model.graph_params()) graphs.push_back(model.params()[id].value());
  TrainConfig config;
  config.learning_rate = 1e-2;
  config.epochs = 3;
  Trainer trainer(model, config);
  trainer.train(overfit_window(), nullptr);
  std::size_t k = 0;
  for (ParamId id : model.graph_params()) CHECK(model.params()[id].value() == graphs[k++]);
}
