#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mstgnn/losses.hpp"
#include "mstgnn/model.hpp"
#include "mstgnn/random.hpp"

namespace mstgnn {

enum class ClipMode { Global, PerTensor };

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  double clip_norm = 0.5;
  ClipMode clip_mode = ClipMode::Global;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;  ///< mini-batch shuffling
  LossWeights loss;
  bool teacher_forcing = false;
  std::size_t stride = 1;  ///< window stride used when slicing sequences

  void validate() const;
};

/// Global l2 norm of a gradient set. Throws NumericError on NaN/Inf.
double global_norm(const std::vector<const Tensor*>& grads);

/// Rescales all gradients by max_norm / g when their global norm g exceeds
/// max_norm. Returns the norm before clipping.
double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm);

/// Applies the same rule to each tensor separately.
void clip_per_tensor(const std::vector<Tensor*>& grads, double max_norm);

/// Adam with bias correction over the trainable parameters of a store.
/// Parameter masks are re-applied after every update.
class Adam {
 public:
  void step(ParameterStore& store, const TrainConfig& config);

  std::size_t steps() const noexcept { return steps_; }
  void set_steps(std::size_t n) noexcept { steps_ = n; }
  /// Moment estimates per parameter id; empty tensors until first use.
  std::vector<Tensor>& first_moments() noexcept { return m_; }
  std::vector<Tensor>& second_moments() noexcept { return v_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  std::size_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

struct WindowPair {
  Tensor observed;  ///< [T x M x C]
  Tensor future;    ///< [dT x M x C]
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t step = 0;  ///< optimizer steps completed so far
  double l_pred = 0.0;
  double l_gram = 0.0;
  double l_ent = 0.0;
  double total = 0.0;
  double mae = 0.0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const EpochMetrics& m);

/// Loss terms of one window, built on the given tape.
LossTerms window_loss(Tape& tape, const Model::Forward& forward, const WindowPair& window,
                      const LossWeights& weights);

class Trainer {
 public:
  Trainer(Model& model, TrainConfig config);

  const TrainConfig& config() const noexcept { return config_; }
  Adam& optimizer() noexcept { return adam_; }
  const Adam& optimizer() const noexcept { return adam_; }

  /// Called after every forward pass with the recorded operators.
  void set_observer(std::function<void(const Model::Forward&)> fn) { observer_ = std::move(fn); }

  /// One optimizer step over the given windows (loss averaged over them).
  EpochMetrics step(const std::vector<const WindowPair*>& batch);

  /// Shuffled pass over all windows in mini-batches.
  EpochMetrics run_epoch(const std::vector<WindowPair>& windows);

  /// Runs config.epochs epochs, appending one metrics row per epoch.
  std::vector<EpochMetrics> train(const std::vector<WindowPair>& windows, std::ostream* log);

 private:
  Model& model_;
  TrainConfig config_;
  Adam adam_;
  Rng shuffle_rng_;
  std::size_t epoch_ = 0;
  std::function<void(const Model::Forward&)> observer_;
};

}  // namespace mstgnn
