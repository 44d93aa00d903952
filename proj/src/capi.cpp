#include "mstgnn/mstgnn.h"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "mstgnn/checkpoint.hpp"
#include "mstgnn/config.hpp"
#include "mstgnn/data.hpp"
#include "mstgnn/suite.hpp"

struct mstg_sequence {
  mstgnn::MotionSequence seq;
};

struct mstg_model {
  mstgnn::Checkpoint ck;
};

namespace {

thread_local std::string last_error;

mstg_status fail(mstg_status code, const std::string& msg) {
  last_error = msg;
  return code;
}

template <typename F>
mstg_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const mstgnn::ParseError& e) {
    return fail(MSTG_ERR_PARSE, e.what());
  } catch (const mstgnn::IoError& e) {
    return fail(MSTG_ERR_IO, e.what());
  } catch (const mstgnn::DimensionError& e) {
    return fail(MSTG_ERR_DIMENSION, e.what());
  } catch (const mstgnn::NumericError& e) {
    return fail(MSTG_ERR_NUMERIC, e.what());
  } catch (const mstgnn::Error& e) {
    return fail(MSTG_ERR_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(MSTG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MSTG_ERR_INTERNAL, "unknown exception");
  }
}

#define MSTG_REQUIRE(cond, what) \
  if (!(cond)) return fail(MSTG_ERR_ARGUMENT, what)

mstg_sequence* wrap(mstgnn::MotionSequence seq) { return new mstg_sequence{std::move(seq)}; }

// Last `frames` frames of a sequence.
mstgnn::Tensor tail_frames(const mstgnn::MotionSequence& seq, std::size_t frames) {
  if (seq.length() < frames)
    throw mstgnn::DimensionError("sequence has " + std::to_string(seq.length()) + " frames, model observes " +
                                 std::to_string(frames));
  const std::size_t block = seq.joints() * seq.channels();
  const double* end = seq.frames.data() + seq.length() * block;
  return mstgnn::Tensor({frames, seq.joints(), seq.channels()}, std::vector<double>(end - frames * block, end));
}

void check_layout(const mstgnn::ModelConfig& cfg, const mstgnn::MotionSequence& seq, const std::string& what) {
  if (seq.joints() != cfg.skeleton.joints || seq.channels() != cfg.skeleton.channels)
    throw mstgnn::DimensionError(what + " has " + std::to_string(seq.joints()) + " joints x " +
                                 std::to_string(seq.channels()) + " channels, model expects " +
                                 std::to_string(cfg.skeleton.joints) + " x " +
                                 std::to_string(cfg.skeleton.channels));
}

void write_matrix(const std::filesystem::path& path, const mstgnn::Tensor& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mstgnn::IoError("cannot write " + path.string());
  const std::size_t rows = m.dim(0), cols = m.size() / rows;
  char buf[32];
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.6g", m[i * cols + j]);
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace

extern "C" {

const char* mstg_last_error(void) { return last_error.c_str(); }

const char* mstg_status_name(mstg_status status) {
  switch (status) {
    case MSTG_OK: return "ok";
    case MSTG_ERR_ARGUMENT: return "invalid argument";
    case MSTG_ERR_IO: return "i/o error";
    case MSTG_ERR_PARSE: return "parse error";
    case MSTG_ERR_DIMENSION: return "dimension error";
    case MSTG_ERR_NUMERIC: return "numeric error";
    case MSTG_ERR_CHECK_FAILED: return "check failed";
    case MSTG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mstg_status mstg_sequence_load(const char* path, mstg_sequence** out) {
  MSTG_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = wrap(mstgnn::load_motion_csv(path));
    return MSTG_OK;
  });
}

mstg_status mstg_sequence_save(const mstg_sequence* seq, const char* path) {
  MSTG_REQUIRE(seq && path, "null argument");
  return guarded([&] {
    mstgnn::save_motion_csv(path, seq->seq);
    return MSTG_OK;
  });
}

mstg_status mstg_sequence_synth(size_t joints, size_t channels, size_t frames, uint64_t seed, double amplitude,
                                mstg_sequence** out) {
  MSTG_REQUIRE(out, "null argument");
  return guarded([&] {
    mstgnn::SynthOptions o;
    o.joints = joints;
    o.channels = channels;
    o.frames = frames;
    o.seed = seed;
    o.amplitude = amplitude;
    *out = wrap(mstgnn::synth_generate(o));
    return MSTG_OK;
  });
}

mstg_status mstg_sequence_shape(const mstg_sequence* seq, size_t* frames, size_t* joints, size_t* channels) {
  MSTG_REQUIRE(seq, "null sequence");
  if (frames) *frames = seq->seq.length();
  if (joints) *joints = seq->seq.joints();
  if (channels) *channels = seq->seq.channels();
  return MSTG_OK;
}

mstg_status mstg_sequence_slice(const mstg_sequence* seq, size_t start, size_t count, mstg_sequence** out) {
  MSTG_REQUIRE(seq && out, "null argument");
  return guarded([&] {
    const auto& s = seq->seq;
    if (count == 0 || start > s.length() || count > s.length() - start)
      throw mstgnn::DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + count) +
                                   ") exceeds a sequence of " + std::to_string(s.length()) + " frames");
    const std::size_t block = s.joints() * s.channels();
    const double* first = s.frames.data() + start * block;
    mstgnn::MotionSequence sub;
    sub.unit = s.unit;
    sub.frames = mstgnn::Tensor({count, s.joints(), s.channels()}, std::vector<double>(first, first + count * block));
    *out = wrap(std::move(sub));
    return MSTG_OK;
  });
}

const double* mstg_sequence_data(const mstg_sequence* seq) { return seq ? seq->seq.frames.data() : nullptr; }

void mstg_sequence_free(mstg_sequence* seq) { delete seq; }

mstg_status mstg_train(const char* config_path, const char* data_dir, const char* checkpoint_path,
                       const char* log_path, mstg_epoch_callback callback, void* user) {
  MSTG_REQUIRE(config_path && data_dir && checkpoint_path, "null argument");
  return guarded([&] {
    namespace fs = std::filesystem;
    const mstgnn::RunConfig cfg = mstgnn::load_run_config(config_path);
    if (!fs::is_directory(data_dir)) throw mstgnn::IoError(std::string("not a directory: ") + data_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(data_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<mstgnn::WindowPair> windows;
    for (const auto& f : files) {
      const auto seq = mstgnn::load_motion_csv(f);
      check_layout(cfg.model, seq, f.string());
      auto w = mstgnn::extract_windows(seq, cfg.model.encoder.frames, cfg.model.horizon, cfg.train.stride);
      std::move(w.begin(), w.end(), std::back_inserter(windows));
    }
    if (windows.empty())
      throw mstgnn::IoError(std::string("no training windows in ") + data_dir + " (need *.csv with at least " +
                            std::to_string(cfg.model.encoder.frames + cfg.model.horizon) + " frames)");

    mstgnn::Model model(cfg.model);
    mstgnn::Trainer trainer(model, cfg.train);
    std::ofstream log;
    if (log_path) {
      log.open(log_path, std::ios::binary);
      if (!log) throw mstgnn::IoError(std::string("cannot write ") + log_path);
      mstgnn::write_metrics_header(log);
    }
    for (std::size_t e = 0; e < cfg.train.epochs; ++e) {
      const auto m = trainer.run_epoch(windows);
      if (log_path) {
        mstgnn::write_metrics_row(log, m);
        log.flush();
      }
      if (callback) {
        const mstg_epoch_metrics cm{m.epoch, m.step, m.l_pred, m.l_gram, m.l_ent, m.total, m.mae};
        callback(&cm, user);
      }
    }
    mstgnn::save_checkpoint(checkpoint_path, cfg, model, trainer.optimizer());
    return MSTG_OK;
  });
}

mstg_status mstg_model_load(const char* checkpoint_path, mstg_model** out) {
  MSTG_REQUIRE(checkpoint_path && out, "null argument");
  return guarded([&] {
    *out = new mstg_model{mstgnn::load_checkpoint(checkpoint_path)};
    return MSTG_OK;
  });
}

void mstg_model_free(mstg_model* model) { delete model; }

mstg_status mstg_model_shape(const mstg_model* model, size_t* observed_frames, size_t* horizon, size_t* joints,
                             size_t* channels) {
  MSTG_REQUIRE(model, "null model");
  const auto& c = model->ck.model.config();
  if (observed_frames) *observed_frames = c.encoder.frames;
  if (horizon) *horizon = c.horizon;
  if (joints) *joints = c.skeleton.joints;
  if (channels) *channels = c.skeleton.channels;
  return MSTG_OK;
}

mstg_status mstg_model_predict(mstg_model* model, const mstg_sequence* seq, mstg_sequence** out) {
  MSTG_REQUIRE(model && seq && out, "null argument");
  return guarded([&] {
    auto& m = model->ck.model;
    check_layout(m.config(), seq->seq, "input sequence");
    mstgnn::MotionSequence pred;
    pred.unit = seq->seq.unit;
    pred.frames = m.predict(tail_frames(seq->seq, m.config().encoder.frames));
    *out = wrap(std::move(pred));
    return MSTG_OK;
  });
}

mstg_status mstg_model_evaluate(mstg_model* model, const mstg_sequence* seq, size_t stride, double* per_horizon,
                                double* mean, size_t* windows) {
  MSTG_REQUIRE(model && seq && per_horizon && mean, "null argument");
  MSTG_REQUIRE(stride > 0, "stride must be positive");
  return guarded([&] {
    auto& m = model->ck.model;
    const auto& c = m.config();
    check_layout(c, seq->seq, "evaluation sequence");
    const auto pairs = mstgnn::extract_windows(seq->seq, c.encoder.frames, c.horizon, stride);
    if (pairs.empty())
      throw mstgnn::DimensionError("evaluation sequence is shorter than one window (" +
                                   std::to_string(c.encoder.frames + c.horizon) + " frames)");
    std::vector<double> acc(c.horizon, 0.0);
    double total = 0.0;
    for (const auto& w : pairs) {
      const auto r = mstgnn::mae(m.predict(w.observed), w.future);
      for (std::size_t h = 0; h < c.horizon; ++h) acc[h] += r.per_horizon[h];
      total += r.mean;
    }
    const double n = static_cast<double>(pairs.size());
    for (std::size_t h = 0; h < c.horizon; ++h) per_horizon[h] = acc[h] / n;
    *mean = total / n;
    if (windows) *windows = pairs.size();
    return MSTG_OK;
  });
}

mstg_status mstg_model_export_graphs(mstg_model* model, const mstg_sequence* seq, const char* out_dir) {
  MSTG_REQUIRE(model && seq && out_dir, "null argument");
  return guarded([&] {
    namespace fs = std::filesystem;
    auto& m = model->ck.model;
    check_layout(m.config(), seq->seq, "input sequence");
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    mstgnn::Tape tape;
    tape.set_grad_enabled(false);
    const auto fwd = m.forward(tape, tail_frames(seq->seq, m.config().encoder.frames));
    const auto& store = m.params();
    write_matrix(dir / "encoder_initial_S0.csv", store[m.encoder().initial_graph].value());
    for (std::size_t k = 0; k < m.encoder().layers.size(); ++k) {
      const auto& layer = m.encoder().layers[k];
      const auto& tr = fwd.trace.layers[k];
      const std::string p = "layer" + std::to_string(k) + "_";
      write_matrix(dir / (p + "S0.csv"), store[layer.spatial_graph].value());
      write_matrix(dir / (p + "T0.csv"), store[layer.temporal_graph].value());
      for (std::size_t r = 0; r < tr.pool_ops.size(); ++r) {
        const std::string s = std::to_string(r + 1);
        write_matrix(dir / (p + "S" + s + ".csv"), tr.spatial_graphs[r].value());
        write_matrix(dir / (p + "psi_pool" + s + ".csv"), tr.pool_ops[r].value());
        write_matrix(dir / (p + "psi_unpool" + s + ".csv"), tr.unpool_ops[r].value());
      }
      for (std::size_t r = 0; r < tr.temporal_graphs.size(); ++r) {
        const std::string s = std::to_string(r + 1);
        write_matrix(dir / (p + "T" + s + ".csv"), tr.temporal_graphs[r].value());
        write_matrix(dir / (p + "phi" + s + ".csv"), tr.temporal_pool_ops[r]);
      }
    }
    write_matrix(dir / "decoder_input_graph.csv", store[m.decoder().params.input_graph].value());
    write_matrix(dir / "decoder_hidden_graph.csv", store[m.decoder().params.hidden_graph].value());
    return MSTG_OK;
  });
}

mstg_status mstg_mae(const mstg_sequence* prediction, const mstg_sequence* truth, double* per_horizon, double* mean) {
  MSTG_REQUIRE(prediction && truth && per_horizon && mean, "null argument");
  return guarded([&] {
    const auto r = mstgnn::mae(prediction->seq.frames, truth->seq.frames);
    std::copy(r.per_horizon.begin(), r.per_horizon.end(), per_horizon);
    *mean = r.mean;
    return MSTG_OK;
  });
}

mstg_status mstg_gradcheck(double step, double tolerance, uint64_t seed, mstg_gradcheck_callback callback,
                           void* user) {
  MSTG_REQUIRE(step > 0.0 && tolerance > 0.0, "step and tolerance must be positive");
  return guarded([&] {
    mstgnn::GradSuiteOptions o;
    o.check.step = step;
    o.check.tolerance = tolerance;
    o.seed = seed;
    bool ok = true;
    std::string first_failure;
    for (const auto& r : mstgnn::gradient_suite(o)) {
      const bool passed = r.passed(tolerance);
      if (!passed && ok) first_failure = r.label + (r.aborted ? ": " + *r.aborted : " at " + r.worst_entry);
      ok = ok && passed;
      if (callback) callback(r.label.c_str(), r.checked, r.max_error, passed ? 1 : 0, user);
    }
    return ok ? MSTG_OK : fail(MSTG_ERR_CHECK_FAILED, "gradient check failed: " + first_failure);
  });
}

}  // extern "C"
