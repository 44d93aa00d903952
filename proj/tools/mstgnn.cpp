// Command-line front end. Talks to the model only through the C API.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mstgnn/mstgnn.h"

namespace {

struct SeqDeleter {
  void operator()(mstg_sequence* s) const { mstg_sequence_free(s); }
};
struct ModelDeleter {
  void operator()(mstg_model* m) const { mstg_model_free(m); }
};
using Sequence = std::unique_ptr<mstg_sequence, SeqDeleter>;
using Model = std::unique_ptr<mstg_model, ModelDeleter>;

struct Failure {
  mstg_status status;
};

void check(mstg_status s) {
  if (s != MSTG_OK) throw Failure{s};
}

Sequence load_sequence(const std::string& path) {
  mstg_sequence* s = nullptr;
  check(mstg_sequence_load(path.c_str(), &s));
  return Sequence(s);
}

Model load_model(const std::string& path) {
  mstg_model* m = nullptr;
  check(mstg_model_load(path.c_str(), &m));
  return Model(m);
}

void print_mae_table(const std::vector<double>& per_horizon, double mean) {
  std::printf("horizon,mae\n");
  for (std::size_t h = 0; h < per_horizon.size(); ++h) std::printf("%zu,%.6g\n", h + 1, per_horizon[h]);
  std::printf("mean,%.6g\n", mean);
}

void print_epoch(const mstg_epoch_metrics* m, void*) {
  std::fprintf(stderr, "epoch %zu step %zu total %.6g l_pred %.6g l_gram %.6g l_ent %.6g mae %.6g\n", m->epoch,
               m->step, m->total, m->l_pred, m->l_gram, m->l_ent, m->mae);
}

void print_check(const char* label, size_t checked, double max_error, int passed, void*) {
  std::printf("%-34s %6zu %.6g %s\n", label, checked, max_error, passed ? "ok" : "FAIL");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale spatio-temporal graph network for skeleton motion prediction"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write a synthetic chain-skeleton motion CSV");
  std::size_t joints = 6, channels = 3, frames = 200;
  std::uint64_t seed = 0;
  double amplitude = 1.0;
  std::string out;
  synth->add_option("--joints", joints, "Joint count")->capture_default_str()->check(CLI::Range(2, 100000));
  synth->add_option("--channels", channels, "Channels per joint")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--frames", frames, "Frame count")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--amplitude", amplitude, "Oscillation scale (0 gives a constant clip)")->capture_default_str();
  synth->add_option("-o,--out", out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train a model on a directory of motion CSVs");
  std::string config, data_dir, checkpoint, log;
  bool verbose = false;
  train->add_option("-c,--config", config, "Config file (key = value)")->required()->check(CLI::ExistingFile);
  train->add_option("-d,--data", data_dir, "Directory of *.csv sequences")->required()->check(CLI::ExistingDirectory);
  train->add_option("-o,--checkpoint", checkpoint, "Checkpoint to write")->required();
  train->add_option("--log", log, "Metrics CSV to write");
  train->add_flag("-v,--verbose", verbose, "Print every epoch to stderr");

  auto* predict = app.add_subcommand("predict", "Predict the frames after an observed sequence");
  std::string input;
  predict->add_option("-m,--checkpoint", checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("-i,--input", input, "Observed motion CSV (last T frames are used)")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("-o,--out", out, "Predicted motion CSV")->required();

  auto* eval = app.add_subcommand("eval", "Per-horizon MAE as CSV on stdout");
  std::vector<std::string> data_files;
  std::size_t stride = 1;
  std::string prediction, truth;
  auto* eval_ck = eval->add_option("-m,--checkpoint", checkpoint, "Checkpoint")->check(CLI::ExistingFile);
  auto* eval_data = eval->add_option("-d,--data", data_files, "Test sequences (all windows are scored)")
                        ->check(CLI::ExistingFile);
  eval->add_option("--stride", stride, "Window stride")->capture_default_str()->check(CLI::PositiveNumber);
  auto* eval_pred = eval->add_option("--prediction", prediction, "Predicted motion CSV")->check(CLI::ExistingFile);
  auto* eval_truth = eval->add_option("--truth", truth, "Ground-truth motion CSV")->check(CLI::ExistingFile);
  eval_ck->needs(eval_data);
  eval_data->needs(eval_ck);
  eval_pred->needs(eval_truth);
  eval_truth->needs(eval_pred);
  eval_ck->excludes(eval_pred);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  double step = 1e-5, tolerance = 1e-4;
  gradcheck->add_option("--step", step, "Central-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", tolerance, "Largest accepted relative error")->capture_default_str();
  gradcheck->add_option("--seed", seed, "Seed for random inputs")->capture_default_str();

  auto* export_graphs = app.add_subcommand("export-graphs", "Write learned graphs and pooling operators as CSV");
  std::string out_dir;
  export_graphs->add_option("-m,--checkpoint", checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  export_graphs->add_option("-i,--input", input, "Motion CSV that conditions the pooling operators")
      ->required()
      ->check(CLI::ExistingFile);
  export_graphs->add_option("-o,--out-dir", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      mstg_sequence* s = nullptr;
      check(mstg_sequence_synth(joints, channels, frames, seed, amplitude, &s));
      Sequence seq(s);
      check(mstg_sequence_save(seq.get(), out.c_str()));
    } else if (*train) {
      check(mstg_train(config.c_str(), data_dir.c_str(), checkpoint.c_str(), log.empty() ? nullptr : log.c_str(),
                       verbose ? print_epoch : nullptr, nullptr));
    } else if (*predict) {
      const Model model = load_model(checkpoint);
      const Sequence observed = load_sequence(input);
      mstg_sequence* p = nullptr;
      check(mstg_model_predict(model.get(), observed.get(), &p));
      Sequence pred(p);
      check(mstg_sequence_save(pred.get(), out.c_str()));
    } else if (*eval) {
      if (!checkpoint.empty()) {
        const Model model = load_model(checkpoint);
        std::size_t horizon = 0;
        check(mstg_model_shape(model.get(), nullptr, &horizon, nullptr, nullptr));
        std::vector<double> sum(horizon, 0.0), per(horizon);
        double mean_sum = 0.0;
        std::size_t total_windows = 0;
        for (const auto& f : data_files) {
          const Sequence seq = load_sequence(f);
          double mean = 0.0;
          std::size_t windows = 0;
          check(mstg_model_evaluate(model.get(), seq.get(), stride, per.data(), &mean, &windows));
          for (std::size_t h = 0; h < horizon; ++h) sum[h] += per[h] * static_cast<double>(windows);
          mean_sum += mean * static_cast<double>(windows);
          total_windows += windows;
        }
        for (double& v : sum) v /= static_cast<double>(total_windows);
        print_mae_table(sum, mean_sum / static_cast<double>(total_windows));
      } else if (!prediction.empty()) {
        const Sequence pred = load_sequence(prediction);
        const Sequence gt = load_sequence(truth);
        std::size_t horizon = 0;
        check(mstg_sequence_shape(pred.get(), &horizon, nullptr, nullptr));
        std::vector<double> per(horizon);
        double mean = 0.0;
        check(mstg_mae(pred.get(), gt.get(), per.data(), &mean));
        print_mae_table(per, mean);
      } else {
        throw CLI::RequiredError("eval needs --checkpoint with --data, or --prediction with --truth");
      }
    } else if (*gradcheck) {
      const mstg_status s = mstg_gradcheck(step, tolerance, seed, print_check, nullptr);
      if (s == MSTG_ERR_CHECK_FAILED) {
        std::fprintf(stderr, "%s\n", mstg_last_error());
        return 1;
      }
      check(s);
    } else if (*export_graphs) {
      const Model model = load_model(checkpoint);
      const Sequence seq = load_sequence(input);
      check(mstg_model_export_graphs(model.get(), seq.get(), out_dir.c_str()));
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", mstg_status_name(f.status), mstg_last_error());
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 0;
}
