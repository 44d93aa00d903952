#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MSTGNN_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Header plus rows [first, last) of a motion CSV.
void write_rows(const fs::path& p, const std::vector<std::string>& lines, std::size_t first, std::size_t last) {
  std::ofstream out(p);
  out << lines[0] << '\n';
  for (std::size_t i = first; i < last; ++i) out << lines[1 + i] << '\n';
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("mstgnn_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kConfig =
    "joints = 4\n"
    "obs_len = 6\n"
    "horizon = 3\n"
    "initial_dim = 6\n"
    "layer_dims = 6, 8\n"
    "spatial_scales = 2\n"
    "temporal_scales = 2\n"
    "temporal_hops = 2\n"
    "embed_dim = 3\n"
    "seed = 9\n"
    "learning_rate = 1e-3\n"
    "batch_size = 4\n"
    "epochs = 2\n";

}  // namespace

TEST_CASE("usage errors exit nonzero") {
  CHECK(run("").code != 0);
  CHECK(run("frobnicate").code != 0);
  CHECK(run("synth --bogus 1 -o /tmp/x.csv").code != 0);
  CHECK(run("predict -m /nonexistent.ckpt -i /nonexistent.csv -o /tmp/x.csv").code != 0);
  CHECK(run("--help").code == 0);
}

TEST_CASE("synth is deterministic") {
  TempDir dir;
  const auto a = dir.path / "a.csv", b = dir.path / "b.csv";
  REQUIRE(run("synth --seed 7 -o " + a.string()).code == 0);
  REQUIRE(run("synth --seed 7 -o " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("6,3,synthetic\n", 0) == 0);
  CHECK(lines_of(slurp(a)).size() == 201);
}

TEST_CASE("gradcheck passes") {
  const Result r = run("gradcheck");
  CHECK(r.code == 0);
  CHECK(r.out.find("model") != std::string::npos);
}

TEST_CASE("train, predict, eval and export-graphs") {
  TempDir dir;
  fs::create_directories(dir.path / "data");
  {
    std::ofstream(dir.path / "model.cfg") << kConfig;
  }
  REQUIRE(run("synth --joints 4 --frames 30 --seed 1 -o " + (dir.path / "data" / "a.csv").string()).code == 0);
  REQUIRE(run("synth --joints 4 --frames 25 --seed 2 -o " + (dir.path / "data" / "b.csv").string()).code == 0);

  const auto ckpt = dir.path / "model.ckpt", log = dir.path / "log.csv";
  REQUIRE(run("train -c " + (dir.path / "model.cfg").string() + " -d " + (dir.path / "data").string() + " -o " +
              ckpt.string() + " --log " + log.string())
              .code == 0);
  const auto log_lines = lines_of(slurp(log));
  REQUIRE(log_lines.size() == 3);
  CHECK(log_lines[0] == "epoch,step,l_pred,l_gram,l_ent,total,mae");

  // One 9-frame clip: 6 observed frames followed by the 3 to predict.
  const auto source = lines_of(slurp(dir.path / "data" / "b.csv"));
  const auto clip = dir.path / "clip.csv", observed = dir.path / "obs.csv", truth = dir.path / "truth.csv";
  write_rows(clip, source, 4, 13);
  write_rows(observed, source, 4, 10);
  write_rows(truth, source, 10, 13);

  const auto pred = dir.path / "pred.csv";
  REQUIRE(run("predict -m " + ckpt.string() + " -i " + observed.string() + " -o " + pred.string()).code == 0);
  CHECK(lines_of(slurp(pred)).size() == 4);

  const Result direct = run("eval -m " + ckpt.string() + " -d " + clip.string());
  const Result piped = run("eval --prediction " + pred.string() + " --truth " + truth.string());
  REQUIRE(direct.code == 0);
  REQUIRE(piped.code == 0);
  CHECK(direct.out == piped.out);
  const auto rows = lines_of(direct.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "horizon,mae");
  CHECK(rows[4].rfind("mean,", 0) == 0);

  CHECK(run("eval --prediction " + pred.string() + " --truth " + observed.string()).code != 0);

  const auto graphs = dir.path / "graphs";
  REQUIRE(run("export-graphs -m " + ckpt.string() + " -i " + observed.string() + " -o " + graphs.string()).code == 0);
  for (const char* name : {"encoder_initial_S0.csv", "layer0_S0.csv", "layer0_T0.csv", "layer1_S1.csv",
                           "layer1_psi_pool1.csv", "layer1_psi_unpool1.csv", "layer0_T1.csv", "layer0_phi1.csv",
                           "decoder_input_graph.csv", "decoder_hidden_graph.csv"})
    CHECK_MESSAGE(fs::exists(graphs / name), name);
  const auto psi = lines_of(slurp(graphs / "layer0_psi_pool1.csv"));
  CHECK(psi.size() == 4);

  // Identical runs produce identical bytes.
  const auto ckpt2 = dir.path / "model2.ckpt", log2 = dir.path / "log2.csv";
  REQUIRE(run("train -c " + (dir.path / "model.cfg").string() + " -d " + (dir.path / "data").string() + " -o " +
              ckpt2.string() + " --log " + log2.string())
              .code == 0);
  CHECK(slurp(ckpt) == slurp(ckpt2));
  CHECK(slurp(log) == slurp(log2));
}

TEST_CASE("bad config is reported with its line") {
  TempDir dir;
  fs::create_directories(dir.path / "data");
  std::ofstream(dir.path / "bad.cfg") << "joints = 4\nlearning_rat = 1\n";
  const std::string cmd = std::string(MSTGNN_CLI) + " train -c " + (dir.path / "bad.cfg").string() + " -d " +
                          (dir.path / "data").string() + " -o " + (dir.path / "x.ckpt").string() + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[1024];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  CHECK(pclose(pipe) != 0);
  CHECK(out.find("line 2") != std::string::npos);
}
