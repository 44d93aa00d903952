#include "mstgnn/suite.hpp"

#include <functional>

#include "mstgnn/convolution.hpp"
#include "mstgnn/decoder.hpp"
#include "mstgnn/encoder.hpp"
#include "mstgnn/losses.hpp"
#include "mstgnn/model.hpp"
#include "mstgnn/mstgcu.hpp"
#include "mstgnn/multiscale.hpp"
#include "mstgnn/random.hpp"
#include "mstgnn/training.hpp"

namespace mstgnn {

namespace {

constexpr std::size_t kT = 4, kM = 5, kD = 3;

class Case {
 public:
  explicit Case(std::uint64_t seed) : rng_(seed) {}

  Tensor random(const Shape& shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    for (double& v : t.values()) v = rng_.uniform(lo, hi);
    return t;
  }

  /// Entries with magnitude in [0.1, 1], keeping ReLU/abs inputs off their kinks.
  Tensor away_from_zero(const Shape& shape) {
    Tensor t(shape);
    for (double& v : t.values()) v = (rng_.uniform() < 0.5 ? -1.0 : 1.0) * rng_.uniform(0.1, 1.0);
    return t;
  }

  Parameter& add(const std::string& name, Tensor value) { return store_[store_.add(name, std::move(value))]; }
  Parameter& param(const std::string& name, const Shape& shape) { return add(name, random(shape)); }

  ParameterStore& store() { return store_; }
  Rng& rng() { return rng_; }

  std::vector<Parameter*> params() {
    std::vector<Parameter*> out;
    for (auto& p : store_) out.push_back(&p);
    return out;
  }

 private:
  Rng rng_;
  ParameterStore store_;
};

using Body = std::function<std::vector<Var>(Tape&)>;

// Reduces every output to a scalar through fixed random weights so that each
// output entry contributes to the checked gradient.
GradCheckReport check(const char* label, Case& c, const Body& body, const GradCheckOptions& options) {
  std::vector<Tensor> weights;
  {
    Tape probe;
    for (const Var& out : body(probe)) weights.push_back(c.random(out.shape()));
  }
  const ScalarFn f = [&](Tape& tape) {
    const auto outs = body(tape);
    Var total = sum(mul(outs[0], tape.constant(weights[0])));
    for (std::size_t k = 1; k < outs.size(); ++k) total = add(total, sum(mul(outs[k], tape.constant(weights[k]))));
    return total;
  };
  return grad_check(label, f, c.params(), options);
}

Var p(Tape& tape, Parameter& param) { return tape.parameter(param); }

}  // namespace

std::vector<GradCheckReport> gradient_suite(const GradSuiteOptions& options) {
  std::vector<GradCheckReport> reports;
  const auto& opt = options.check;
  std::uint64_t seed = options.seed;
  auto run = [&](const char* label, const std::function<Body(Case&)>& setup) {
    Case c(seed++);
    const Body body = setup(c);
    reports.push_back(check(label, c, body, opt));
  };

  // Primitives.
  run("matmul", [](Case& c) {
    auto& a = c.param("a", {3, 4});
    auto& b = c.param("b", {4, 2});
    return Body([&](Tape& t) { return std::vector{matmul(p(t, a), p(t, b))}; });
  });
  run("transpose", [](Case& c) {
    auto& a = c.param("a", {3, 4});
    return Body([&](Tape& t) { return std::vector{transpose(p(t, a))}; });
  });
  run("add/sub/mul", [](Case& c) {
    auto& a = c.param("a", {2, 3});
    auto& b = c.param("b", {2, 3});
    return Body([&](Tape& t) {
      const Var x = p(t, a), y = p(t, b);
      return std::vector{add(x, y), sub(x, y), mul(x, y)};
    });
  });
  run("affine", [](Case& c) {
    auto& a = c.param("a", {5});
    return Body([&](Tape& t) { return std::vector{affine(p(t, a), -1.5, 0.25)}; });
  });
  run("relu", [](Case& c) {
    auto& a = c.add("a", c.away_from_zero({3, 4}));
    return Body([&](Tape& t) { return std::vector{relu(p(t, a))}; });
  });
  run("sigmoid/tanh", [](Case& c) {
    auto& a = c.param("a", {3, 4});
    return Body([&](Tape& t) {
      const Var x = p(t, a);
      return std::vector{sigmoid(x), tanh(x)};
    });
  });
  run("abs", [](Case& c) {
    auto& a = c.add("a", c.away_from_zero({3, 4}));
    return Body([&](Tape& t) { return std::vector{abs(p(t, a))}; });
  });
  run("square", [](Case& c) {
    auto& a = c.param("a", {6});
    return Body([&](Tape& t) { return std::vector{square(p(t, a))}; });
  });
  run("log_clamped", [](Case& c) {
    auto& a = c.add("a", c.random({3, 3}, 0.2, 2.0));
    return Body([&](Tape& t) { return std::vector{log_clamped(p(t, a), 1e-12)}; });
  });
  run("softmax_rows", [](Case& c) {
    auto& a = c.param("a", {4, 3});
    return Body([&](Tape& t) { return std::vector{softmax_rows(p(t, a))}; });
  });
  run("sum/reshape", [](Case& c) {
    auto& a = c.param("a", {2, 6});
    return Body([&](Tape& t) {
      const Var x = p(t, a);
      return std::vector{sum(x), reshape(x, {3, 4})};
    });
  });
  run("swap_leading/merge/unmerge", [](Case& c) {
    auto& a = c.param("a", {kT, kM, kD});
    auto& b = c.param("b", {kM, kD * kT});
    return Body([&](Tape& t) {
      return std::vector{swap_leading(p(t, a)), merge_dims_13(p(t, a)), unmerge_dims_13(p(t, b), kT)};
    });
  });
  run("frame_left_mul", [](Case& c) {
    auto& a = c.param("a", {2, kM});
    auto& x = c.param("x", {kT, kM, kD});
    return Body([&](Tape& t) { return std::vector{frame_left_mul(p(t, a), p(t, x))}; });
  });
  run("time_left_mul", [](Case& c) {
    auto& a = c.param("a", {3, kT});
    auto& x = c.param("x", {kT, kM, kD});
    return Body([&](Tape& t) { return std::vector{time_left_mul(p(t, a), p(t, x))}; });
  });
  run("matmul_last", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& w = c.param("w", {kD, 2});
    return Body([&](Tape& t) { return std::vector{matmul_last(p(t, x), p(t, w))}; });
  });
  run("concat_last", [](Case& c) {
    auto& a = c.param("a", {kT, kM, 2});
    auto& b = c.param("b", {kT, kM, 3});
    return Body([&](Tape& t) { return std::vector{concat_last({p(t, a), p(t, b), p(t, a)})}; });
  });
  run("add_row", [](Case& c) {
    auto& x = c.param("x", {kM, 4});
    auto& b = c.param("b", {4});
    auto& b2 = c.param("b2", {1, 4});
    return Body([&](Tape& t) { return std::vector{add_row(p(t, x), p(t, b)), add_row(p(t, x), p(t, b2))}; });
  });
  run("scale_rows", [](Case& c) {
    auto& x = c.param("x", {kM, 4});
    auto& s = c.param("s", {kM, 1});
    return Body([&](Tape& t) { return std::vector{scale_rows(p(t, x), p(t, s))}; });
  });
  run("slice/stack/mean_leading", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& y = c.param("y", {kM, kD});
    return Body([&](Tape& t) {
      const Var a = p(t, x);
      return std::vector{slice_leading(a, 2), stack_leading({p(t, y), slice_leading(a, 0)}), mean_leading(a)};
    });
  });
  run("row_outer", [](Case& c) {
    auto& x = c.param("x", {kM, kD});
    return Body([&](Tape& t) { return std::vector{row_outer(p(t, x))}; });
  });
  run("graph_power", [](Case& c) {
    auto& g = c.param("g", {kT, kT});
    return Body([&](Tape& t) { return std::vector{graph_power(p(t, g), 3), graph_power(p(t, g), -2)}; });
  });

  // Convolutions.
  run("spatial_graph_conv", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& s = c.param("s", {kM, kM});
    auto& u = c.param("u", {3, kD, 2});
    return Body([&](Tape& t) { return std::vector{spatial_graph_conv(p(t, x), p(t, s), p(t, u), 2)}; });
  });
  run("temporal_graph_conv", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& g = c.param("g", {kT, kT});
    auto& v = c.param("v", {5, kD, 2});
    return Body([&](Tape& t) { return std::vector{temporal_graph_conv(p(t, x), p(t, g), p(t, v), 2)}; });
  });

  // Multiscale operators.
  run("spatial_pool_operator", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& s0 = c.param("s0", {kM, kM});
    auto& t0 = c.param("t0", {kT, kT});
    auto& v = c.param("v", {3, kD, 2});
    auto& w = c.param("w", {2 * kT, 3});
    return Body([&](Tape& t) {
      return std::vector{spatial_pool_operator(p(t, x), p(t, s0), p(t, t0), p(t, v), p(t, w), 1)};
    });
  });
  run("downscale_spatial", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& s0 = c.param("s0", {kM, kM});
    auto& z = c.param("z", {kM, 3});
    return Body([&](Tape& t) {
      const auto d = downscale_spatial(p(t, x), p(t, s0), softmax_rows(p(t, z)));
      return std::vector{d.features, d.graph};
    });
  });
  run("downscale_temporal", [](Case& c) {
    auto& x = c.param("x", {kT, kM, kD});
    auto& t0 = c.param("t0", {kT, kT});
    return Body([&](Tape& t) {
      const auto d = downscale_temporal(p(t, x), p(t, t0), temporal_pool_operator(kT, 2));
      return std::vector{d.features, d.graph};
    });
  });
  run("spatial_unpool_operator", [](Case& c) {
    auto& x0 = c.param("x0", {kT, kM, kD});
    auto& xr = c.param("xr", {kT, 3, kD});
    auto& s0 = c.param("s0", {kM, kM});
    auto& sr = c.param("sr", {3, 3});
    auto& t0 = c.param("t0", {kT, kT});
    auto& vf = c.param("vf", {3, kD, 2});
    auto& vc = c.param("vc", {3, kD, 2});
    auto& ef = c.param("ef", {2 * kT, 3});
    auto& ec = c.param("ec", {2 * kT, 3});
    return Body([&](Tape& t) {
      const UnpoolWeights w{p(t, vf), p(t, vc), p(t, ef), p(t, ec)};
      return std::vector{spatial_unpool_operator(p(t, x0), p(t, xr), p(t, s0), p(t, sr), p(t, t0), w, 1)};
    });
  });
  run("cross_scale_fusion", [](Case& c) {
    auto& x0 = c.param("x0", {kT, kM, kD});
    auto& xr = c.param("xr", {kT, 3, kD});
    auto& z = c.param("z", {kM, 3});
    auto& w = c.param("w", {kD, kD});
    auto& xt = c.param("xt", {2, kM, kD});
    return Body([&](Tape& t) {
      const CoarseSpatial cs{p(t, xr), softmax_rows(p(t, z)), p(t, w)};
      return std::vector{cross_scale_spatial_fuse(p(t, x0), {cs}), cross_scale_temporal_fuse(p(t, x0), {p(t, xt)})};
    });
  });

  // Layers.
  for (const ConvOrder order : {ConvOrder::SpatialFirst, ConvOrder::TemporalFirst}) {
    const char* label = order == ConvOrder::SpatialFirst ? "mstgcu (spatial first)" : "mstgcu (temporal first)";
    run(label, [order](Case& c) {
      MstGcuConfig cfg;
      cfg.in_dim = kD;
      cfg.out_dim = 4;
      cfg.frames = kT;
      cfg.scales = ScaleSpec::make(kM, kT, 2, 2);
      cfg.temporal_hops = 2;
      cfg.embed_dim = 2;
      cfg.order = order;
      const auto layer = make_mstgcu_layer(c.store(), 0, cfg, SkeletonSpec::chain(kM), c.rng());
      auto& x = c.param("x", {kT, kM, kD});
      return Body([&c, &x, layer](Tape& t) { return std::vector{mstgcu_forward(t, c.store(), layer, p(t, x))}; });
    });
  }
  run("ga_gru_cell/readout", [](Case& c) {
    DecoderConfig cfg;
    cfg.hidden_dim = 4;
    cfg.readout_dim = 3;
    const auto dec = make_decoder(c.store(), cfg, SkeletonSpec::chain(kM), c.rng());
    auto& in = c.param("input", {kM, dec.input_dim()});
    auto& h = c.param("hidden", {kM, 4});
    return Body([&c, &in, &h, dec](Tape& t) {
      const auto step = ga_gru_cell(t, c.store(), dec, p(t, in), p(t, h));
      return std::vector{step.hidden, readout(t, c.store(), dec, step.hidden)};
    });
  });

  // Losses.
  run("l1_prediction_loss", [](Case& c) {
    auto& pred = c.param("pred", {3, kM, kD});
    auto& truth = c.add("truth", c.away_from_zero({3, kM, kD}));
    for (std::size_t i = 0; i < truth.value().size(); ++i) truth.value()[i] += pred.value()[i];
    return Body([&](Tape& t) { return std::vector{l1_prediction_loss(p(t, pred), p(t, truth))}; });
  });
  run("gram_matrix_loss", [](Case& c) {
    auto& pred = c.param("pred", {3, kM, kD});
    auto& truth = c.param("truth", {3, kM, kD});
    auto& last = c.param("last", {kM, kD});
    return Body([&](Tape& t) { return std::vector{gram_matrix_loss(p(t, pred), p(t, truth), p(t, last))}; });
  });
  run("entropy_loss", [](Case& c) {
    auto& a = c.param("a", {kM, 3});
    auto& b = c.param("b", {kM, 2});
    return Body([&](Tape& t) {
      return std::vector{entropy_loss(t, {softmax_rows(p(t, a)), softmax_rows(p(t, b))})};
    });
  });

  if (options.include_model) {
    ModelConfig mc;
    mc.skeleton = SkeletonSpec::chain(kM);
    mc.encoder.frames = kT;
    mc.encoder.initial_dim = 6;
    mc.encoder.layer_dims = {6, 8};
    mc.encoder.spatial_scales = 2;
    mc.encoder.temporal_scales = 2;
    mc.encoder.temporal_hops = 2;
    mc.encoder.embed_dim = 3;
    mc.horizon = 3;
    mc.seed = seed;
    Model model(mc);
    Case c(seed + 1);
    WindowPair w{c.random({kT, kM, kD}), c.random({3, kM, kD})};
    std::vector<Parameter*> params;
    for (auto& prm : model.params()) params.push_back(&prm);
    const ScalarFn f = [&](Tape& tape) {
      const auto fwd = model.forward(tape, w.observed);
      return window_loss(tape, fwd, w, LossWeights{}).total;
    };
    reports.push_back(grad_check("model (T=4, M=5, R=2, D_h=8)", f, params, opt));
  }
  return reports;
}

}  // namespace mstgnn
