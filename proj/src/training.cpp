#include "mstgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include <Eigen/Core>

#include "mstgnn/data.hpp"

namespace mstgnn {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error("learning rate must be non-negative");
  if (batch_size == 0) throw Error("batch size must be positive");
  if (!(clip_norm > 0.0)) throw Error("clip norm must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw Error("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw Error("Adam epsilon must be positive");
  if (stride == 0) throw Error("window stride must be positive");
  loss.validate();
}

double global_norm(const std::vector<const Tensor*>& grads) {
  double sq = 0.0;
  for (const Tensor* g : grads)
    sq += Eigen::Map<const Eigen::ArrayXd>(g->data(), static_cast<Eigen::Index>(g->size())).square().sum();
  if (!std::isfinite(sq)) throw NumericError("non-finite gradient");
  return std::sqrt(sq);
}

double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm) {
  const double norm = global_norm(std::vector<const Tensor*>(grads.begin(), grads.end()));
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* g : grads)
      Eigen::Map<Eigen::ArrayXd>(g->data(), static_cast<Eigen::Index>(g->size())) *= scale;
  }
  return norm;
}

void clip_per_tensor(const std::vector<Tensor*>& grads, double max_norm) {
  for (Tensor* g : grads) clip_global_norm({g}, max_norm);
}

void Adam::step(ParameterStore& store, const TrainConfig& config) {
  if (m_.size() < store.size()) {
    m_.resize(store.size());
    v_.resize(store.size());
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (ParamId id = 0; id < store.size(); ++id) {
    Parameter& p = store[id];
    if (!p.trainable()) continue;
    if (m_[id].empty()) {
      m_[id] = Tensor(p.value().shape());
      v_[id] = Tensor(p.value().shape());
    }
    // Chunked so that each block of moments stays in cache across the passes.
    constexpr std::size_t kChunk = 4096;
    const std::size_t size = p.value().size();
    for (std::size_t at = 0; at < size; at += kChunk) {
      const auto n = static_cast<Eigen::Index>(std::min(kChunk, size - at));
      Eigen::Map<Eigen::ArrayXd> m(m_[id].data() + at, n), v(v_[id].data() + at, n), w(p.value().data() + at, n);
      const Eigen::Map<const Eigen::ArrayXd> g(p.grad().data() + at, n);
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.square();
      w -= (config.learning_rate / c1) * m / ((v * (1.0 / c2)).sqrt() + config.epsilon);
      if (!w.allFinite()) throw NumericError("non-finite Adam update for " + p.name());
    }
    p.apply_mask();
  }
}

void write_metrics_header(std::ostream& out) { out << "epoch,step,l_pred,l_gram,l_ent,total,mae\n"; }

void write_metrics_row(std::ostream& out, const EpochMetrics& m) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(6) << m.epoch << ',' << m.step << ',' << m.l_pred << ',' << m.l_gram << ','
      << m.l_ent << ',' << m.total << ',' << m.mae << '\n';
  out.flags(flags);
  out.precision(precision);
}

LossTerms window_loss(Tape& tape, const Model::Forward& forward, const WindowPair& window,
                      const LossWeights& weights) {
  const Tensor& obs = window.observed;
  const std::size_t block = obs.dim(1) * obs.dim(2);
  std::vector<double> last(obs.data() + (obs.dim(0) - 1) * block, obs.data() + obs.dim(0) * block);
  const Var truth = tape.constant(window.future);
  const Var last_frame = tape.constant(Tensor({obs.dim(1), obs.dim(2)}, std::move(last)));
  LossTerms terms;
  terms.prediction = l1_prediction_loss(forward.prediction, truth);
  terms.gram = gram_matrix_loss(forward.prediction, truth, last_frame);
  terms.entropy = entropy_loss(tape, forward.pool_ops);
  terms.total = total_loss(terms.prediction, terms.gram, terms.entropy, weights);
  return terms;
}

Trainer::Trainer(Model& model, TrainConfig config)
    : model_(model), config_(std::move(config)), shuffle_rng_(config_.seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.validate();
}

EpochMetrics Trainer::step(const std::vector<const WindowPair*>& batch) {
  if (batch.empty()) throw Error("empty mini-batch");
  ParameterStore& store = model_.params();
  store.zero_grads();
  EpochMetrics acc;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const WindowPair* w : batch) {
    Tape tape;
    Model::ForwardOptions opts;
    opts.teacher_forcing = config_.teacher_forcing;
    opts.truth = &w->future;
    const auto fwd = model_.forward(tape, w->observed, opts);
    if (observer_) observer_(fwd);
    const LossTerms terms = window_loss(tape, fwd, *w, config_.loss);
    const double total = terms.total.value().item();
    if (!(total <= 1e9)) throw NumericError("training diverged: loss " + std::to_string(total));
    tape.backward(affine(terms.total, scale, 0.0));
    acc.l_pred += scale * terms.prediction.value().item();
    acc.l_gram += scale * terms.gram.value().item();
    acc.l_ent += scale * terms.entropy.value().item();
    acc.total += scale * total;
    acc.mae += scale * mae(fwd.prediction.value(), w->future).mean;
  }
  std::vector<Tensor*> grads;
  for (auto& p : store)
    if (p.trainable()) grads.push_back(&p.grad());
  if (config_.clip_mode == ClipMode::Global)
    clip_global_norm(grads, config_.clip_norm);
  else
    clip_per_tensor(grads, config_.clip_norm);
  adam_.step(store, config_);
  acc.step = adam_.steps();
  return acc;
}

EpochMetrics Trainer::run_epoch(const std::vector<WindowPair>& windows) {
  if (windows.empty()) throw Error("no training windows");
  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(shuffle_rng_.uniform() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  EpochMetrics epoch;
  epoch.epoch = ++epoch_;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    std::vector<const WindowPair*> batch;
    for (std::size_t k = start; k < std::min(order.size(), start + config_.batch_size); ++k)
      batch.push_back(&windows[order[k]]);
    const EpochMetrics m = step(batch);
    epoch.l_pred += m.l_pred;
    epoch.l_gram += m.l_gram;
    epoch.l_ent += m.l_ent;
    epoch.total += m.total;
    epoch.mae += m.mae;
    ++batches;
  }
  const double n = static_cast<double>(batches);
  epoch.l_pred /= n;
  epoch.l_gram /= n;
  epoch.l_ent /= n;
  epoch.total /= n;
  epoch.mae /= n;
  epoch.step = adam_.steps();
  return epoch;
}

std::vector<EpochMetrics> Trainer::train(const std::vector<WindowPair>& windows, std::ostream* log) {
  std::vector<EpochMetrics> history;
  if (log) write_metrics_header(*log);
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    history.push_back(run_epoch(windows));
    if (log) {
      write_metrics_row(*log, history.back());
      log->flush();
    }
  }
  return history;
}

}  // namespace mstgnn
