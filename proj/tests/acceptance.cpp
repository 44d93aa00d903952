// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mstgnn/checkpoint.hpp"
#include "mstgnn/config.hpp"
#include "mstgnn/convolution.hpp"
#include "mstgnn/data.hpp"
#include "mstgnn/losses.hpp"
#include "mstgnn/mstgnn.h"
#include "mstgnn/suite.hpp"
#include "mstgnn/training.hpp"

using namespace mstgnn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

Tensor random_stochastic(std::size_t m, std::size_t n, Rng& rng) {
  Tensor t({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += t(i, j) = rng.uniform(0.01, 1.0);
    for (std::size_t j = 0; j < n; ++j) t(i, j) /= total;
  }
  return t;
}

WindowPair overfit_window() {
  SynthOptions o;
  o.frames = 15;
  o.seed = 7;
  return extract_windows(synth_generate(o), 10, 5, 1).at(0);
}

RunConfig overfit_config() {
  RunConfig c = default_run_config(6);
  c.model.seed = 7;
  c.train.seed = 7;
  return c;
}

double mean_row_entropy(const std::vector<Var>& ops) {
  double total = 0.0;
  for (const Var& v : ops) {
    const Tensor& p = v.value();
    double h = 0.0;
    for (std::size_t i = 0; i < p.dim(0); ++i)
      for (std::size_t j = 0; j < p.dim(1); ++j)
        if (p(i, j) > 0.0) h -= p(i, j) * std::log(p(i, j));
    total += h / static_cast<double>(p.dim(0));
  }
  return ops.empty() ? 0.0 : total / static_cast<double>(ops.size());
}

double row_sum_error(const Tensor& p) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.dim(0); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p.dim(1); ++j) {
      if (p(i, j) < 0.0 || p(i, j) > 1.0) return INFINITY;
      row += p(i, j);
    }
    worst = std::max(worst, std::abs(row - 1.0));
  }
  return worst;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

Verdict gradient_suite_check() {
  const auto start = Clock::now();
  const auto reports = gradient_suite();
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  std::string failed;
  for (const auto& r : reports) {
    worst = std::max(worst, r.max_error);
    if (!r.passed(1e-4)) failed += " " + r.label;
  }
  const bool pass = failed.empty() && elapsed < 120.0;
  return {pass, fmt("%zu checks, worst rel. err %.3g, %.1f s%s", reports.size(), worst, elapsed,
                    failed.empty() ? "" : (" failed:" + failed).c_str())};
}

Verdict decomposition_check() {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto M = 1 + static_cast<std::size_t>(rng.uniform() * 6.0);
    const auto T = 1 + static_cast<std::size_t>(rng.uniform() * 6.0);
    const auto D = 1 + static_cast<std::size_t>(rng.uniform() * 3.0);
    const Tensor x = random_tensor({T, M, D}, rng);
    worst = std::max(worst, decomposition_equivalence_check(x, random_tensor({M, M}, rng), random_tensor({T, T}, rng)));
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-10 && elapsed < 5.0, fmt("20 instances, max abs err %.3g, %.3f s", worst, elapsed)};
}

Verdict stochasticity_check() {
  RunConfig config = overfit_config();
  Model model(config.model);
  Trainer trainer(model, config.train);
  double psi_err = 0.0;
  bool phi_exact = true;
  std::size_t passes = 0, operators = 0;
  trainer.set_observer([&](const Model::Forward& f) {
    ++passes;
    for (const auto* ops : {&f.pool_ops, &f.unpool_ops})
      for (const Var& p : *ops) {
        psi_err = std::max(psi_err, row_sum_error(p.value()));
        ++operators;
      }
    for (const auto& layer : f.trace.layers)
      for (const Tensor& phi : layer.temporal_pool_ops)
        for (std::size_t j = 0; j < phi.dim(1); ++j) {
          double col = 0.0;
          for (std::size_t i = 0; i < phi.dim(0); ++i) col += phi(i, j);
          phi_exact = phi_exact && col == 1.0;
        }
  });
  const WindowPair w = overfit_window();
  for (int step = 0; step < 100; ++step) trainer.step({&w});
  const bool pass = passes == 100 && psi_err < 1e-12 && phi_exact;
  return {pass, fmt("%zu forward passes, %zu Psi operators, worst row-sum err %.3g, Phi columns exact: %s", passes,
                    operators, psi_err, phi_exact ? "yes" : "no")};
}

Verdict mask_check() {
  RunConfig config = overfit_config();
  config.model.encoder.initial_dim = 8;
  config.model.encoder.layer_dims = {8, 8};
  config.model.encoder.embed_dim = 4;
  config.train.learning_rate = 1e-2;
  Model model(config.model);
  Trainer trainer(model, config.train);
  const WindowPair w = overfit_window();
  std::vector<Tensor> initial;
  for (const auto& layer : model.encoder().layers) initial.push_back(model.params()[layer.temporal_graph].value());
  for (int step = 0; step < 500; ++step) trainer.step({&w});

  std::size_t masked = 0, nonzero = 0, moved = 0;
  for (std::size_t k = 0; k < model.encoder().layers.size(); ++k) {
    const Parameter& p = model.params()[model.encoder().layers[k].temporal_graph];
    const Tensor& mask = *p.mask();
    for (std::size_t i = 0; i < p.value().size(); ++i) {
      if (mask[i] == 0.0) {
        ++masked;
        if (p.value()[i] != 0.0) ++nonzero;
      } else if (p.value()[i] != initial[k][i]) {
        ++moved;
      }
    }
  }
  return {nonzero == 0 && moved > 0 && trainer.optimizer().steps() == 500,
          fmt("500 steps, %zu masked entries, %zu nonzero, %zu trainable entries moved", masked, nonzero, moved)};
}

Verdict loss_check() {
  Tape tape;
  Rng rng(5);
  // Ideal points.
  const Tensor truth = random_tensor({5, 6, 3}, rng), last = random_tensor({6, 3}, rng);
  const double pred_ideal = l1_prediction_loss(tape.constant(truth), tape.constant(truth)).value().item();
  const double gram_ideal =
      gram_matrix_loss(tape.constant(truth), tape.constant(truth), tape.constant(last)).value().item();
  Tensor onehot({6, 3});
  for (std::size_t i = 0; i < 6; ++i) onehot(i, i % 3) = 1.0;
  const double ent_ideal = entropy_loss(tape, {tape.constant(onehot)}).value().item();
  const bool ideal = pred_ideal == 0.0 && gram_ideal == 0.0 && ent_ideal == 0.0;

  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Tensor p = random_tensor({5, 6, 3}, rng), t = random_tensor({5, 6, 3}, rng), l = random_tensor({6, 3}, rng);
    double l1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) l1 += std::abs(p[i] - t[i]);
    worst = std::max(worst, std::abs(l1_prediction_loss(tape.constant(p), tape.constant(t)).value().item() - l1));

    double gram = 0.0;
    const auto at = [&](const Tensor& s, std::size_t f, std::size_t i, std::size_t c) {
      return f == 0 ? l(i, c) : s(f - 1, i, c);
    };
    for (std::size_t f = 1; f <= 5; ++f)
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b) {
            const double vp = at(p, f - 1, i, a) * at(p, f - 1, i, b) + at(p, f, i, a) * at(p, f, i, b);
            const double vt = at(t, f - 1, i, a) * at(t, f - 1, i, b) + at(t, f, i, a) * at(t, f, i, b);
            gram += (vp - vt) * (vp - vt);
          }
    gram /= 5.0;
    worst = std::max(worst, std::abs(gram_matrix_loss(tape.constant(p), tape.constant(t), tape.constant(l)).value().item() - gram));

    const Tensor a = random_stochastic(6, 3, rng), b = random_stochastic(6, 2, rng);
    double ent = 0.0;
    for (const Tensor* psi : {&a, &b}) {
      double h = 0.0;
      for (double v : psi->values()) h -= v * std::log(v);
      ent += h / 6.0 / 2.0;
    }
    worst = std::max(worst, std::abs(entropy_loss(tape, {tape.constant(a), tape.constant(b)}).value().item() - ent));
  }
  return {ideal && worst < 1e-10, fmt("zero at ideal points: %s; 10 instances, worst oracle gap %.3g",
                                       ideal ? "yes" : "no", worst)};
}

struct OverfitRun {
  bool reached = false;
  std::size_t steps = 0;
  double seconds = 0.0;
  double mae = 0.0;
  double entropy = 0.0;
  std::unique_ptr<Model> model;
  std::unique_ptr<Trainer> trainer;
};

OverfitRun overfit(double gamma) {
  RunConfig config = overfit_config();
  config.train.loss.gamma = gamma;
  OverfitRun run;
  run.model = std::make_unique<Model>(config.model);
  run.trainer = std::make_unique<Trainer>(*run.model, config.train);
  const WindowPair w = overfit_window();
  const auto start = Clock::now();
  for (std::size_t step = 1; step <= 2000; ++step) {
    run.mae = run.trainer->step({&w}).mae;
    run.steps = step;
    if (run.mae < 0.05) {
      run.reached = true;
      break;
    }
  }
  run.seconds = seconds_since(start);
  Tape tape;
  tape.set_grad_enabled(false);
  run.entropy = mean_row_entropy(run.model->forward(tape, w.observed).pool_ops);
  return run;
}

std::unique_ptr<Model> trained_model;

Verdict overfit_check() {
  OverfitRun full = overfit(0.03);
  OverfitRun plain = overfit(0.0);
  const bool pass = full.reached && full.seconds < 60.0 && plain.reached && plain.entropy > full.entropy;
  trained_model = std::move(full.model);
  return {pass, fmt("full loss: MAE %.4f at step %zu (%.1f s), Psi entropy %.4f; without L_ent: MAE %.4f at step "
                    "%zu (%.1f s), Psi entropy %.4f",
                    full.mae, full.steps, full.seconds, full.entropy, plain.mae, plain.steps, plain.seconds,
                    plain.entropy)};
}

Verdict ablation_check() {
  struct Variant {
    const char* name;
    std::function<void(RunConfig&)> apply;
  };
  const std::vector<Variant> variants{
      {"R=1", [](RunConfig& c) { c.model.encoder.spatial_scales = c.model.encoder.temporal_scales = 1; }},
      {"fixed graphs", [](RunConfig& c) { c.model.trainable_graphs = false; }},
      {"plain GRU", [](RunConfig& c) { c.model.attention = AttentionMode::Disabled; }},
      {"temporal-first", [](RunConfig& c) { c.model.encoder.order = ConvOrder::TemporalFirst; }},
  };
  const WindowPair w = overfit_window();
  bool pass = true;
  std::string detail;
  for (const auto& v : variants) {
    RunConfig config = overfit_config();
    v.apply(config);
    try {
      Model model(config.model);
      std::vector<Tensor> graphs;
      for (ParamId id : model.graph_params()) graphs.push_back(model.params()[id].value());
      Trainer trainer(model, config.train);
      EpochMetrics first{}, last{};
      for (int step = 0; step < 30; ++step) {
        last = trainer.step({&w});
        if (step == 0) first = last;
      }
      bool ok = std::isfinite(last.total);
      if (!config.model.trainable_graphs) {
        std::size_t k = 0;
        for (ParamId id : model.graph_params()) ok = ok && model.params()[id].value() == graphs[k++];
      }
      pass = pass && ok;
      detail += fmt("%s%s MAE %.3f->%.3f", detail.empty() ? "" : "; ", v.name, first.mae, last.mae);
    } catch (const std::exception& e) {
      pass = false;
      detail += fmt("%s%s error: %s", detail.empty() ? "" : "; ", v.name, e.what());
    }
  }
  return {pass, detail + " (30 steps each)"};
}

Verdict determinism_check() {
  const fs::path root = fs::temp_directory_path() / ("mstgnn_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root / "data");
  {
    std::ofstream(root / "run.cfg") << "joints = 6\nseed = 7\nbatch_size = 2\nepochs = 2\nstride = 5\n";
    mstg_sequence* s = nullptr;
    mstg_sequence_synth(6, 3, 40, 7, 1.0, &s);
    mstg_sequence_save(s, (root / "data" / "seq.csv").c_str());
    mstg_sequence_free(s);
  }
  std::string err;
  const auto train_and_predict = [&](const std::string& tag) {
    const auto ck = root / (tag + ".ckpt"), log = root / (tag + ".csv"), pred = root / (tag + "_pred.csv");
    if (mstg_train((root / "run.cfg").c_str(), (root / "data").c_str(), ck.c_str(), log.c_str(), nullptr, nullptr) !=
        MSTG_OK) {
      err = mstg_last_error();
      return;
    }
    mstg_model* m = nullptr;
    mstg_sequence *seq = nullptr, *out = nullptr;
    mstg_model_load(ck.c_str(), &m);
    mstg_sequence_load((root / "data" / "seq.csv").c_str(), &seq);
    if (mstg_model_predict(m, seq, &out) != MSTG_OK) err = mstg_last_error();
    else mstg_sequence_save(out, pred.c_str());
    mstg_sequence_free(out);
    mstg_sequence_free(seq);
    mstg_model_free(m);
  };
  train_and_predict("a");
  train_and_predict("b");
  const bool logs = slurp(root / "a.csv") == slurp(root / "b.csv") && !slurp(root / "a.csv").empty();
  const bool ckpts = slurp(root / "a.ckpt") == slurp(root / "b.ckpt") && !slurp(root / "a.ckpt").empty();
  const bool preds = slurp(root / "a_pred.csv") == slurp(root / "b_pred.csv") && !slurp(root / "a_pred.csv").empty();
  const auto ck_bytes = fs::exists(root / "a.ckpt") ? fs::file_size(root / "a.ckpt") : 0;
  fs::remove_all(root);
  if (!err.empty()) return {false, "run failed: " + err};
  return {logs && ckpts && preds, fmt("logs identical: %s, checkpoints identical: %s (%ju bytes), predictions "
                                      "identical: %s",
                                      logs ? "yes" : "no", ckpts ? "yes" : "no", static_cast<std::uintmax_t>(ck_bytes),
                                      preds ? "yes" : "no")};
}

Verdict checkpoint_check() {
  if (!trained_model) return {false, "no trained model from the overfit run"};
  RunConfig config = overfit_config();
  const auto path = fs::temp_directory_path() / ("mstgnn_accept_" + std::to_string(::getpid()) + ".ckpt");
  Adam adam;
  save_checkpoint(path, config, *trained_model, adam);
  Checkpoint back = load_checkpoint(path);
  fs::remove(path);
  Rng rng(99);
  std::size_t identical = 0;
  for (int k = 0; k < 10; ++k) {
    const Tensor x = random_tensor({10, 6, 3}, rng);
    if (back.model.predict(x) == trained_model->predict(x)) ++identical;
  }
  return {identical == 10, fmt("%zu/10 predictions bit-identical after save and load", identical)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {"gradient suite", gradient_suite_check},
      {"decomposition oracle", decomposition_check},
      {"stochasticity invariants", stochasticity_check},
      {"structural mask", mask_check},
      {"loss sanity", loss_check},
      {"overfit demonstration", overfit_check},
      {"ablation switches", ablation_check},
      {"determinism", determinism_check},
      {"checkpoint round trip", checkpoint_check},
  };
  int failures = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", index, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
