#include "mstgnn/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "mstgnn/random.hpp"

namespace mstgnn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::size_t parse_count(std::string_view cell, std::size_t line, const char* what) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size() || v == 0)
    throw ParseError(at_line(line) + "bad " + what + " '" + std::string(cell) + "'");
  return v;
}

double parse_real(std::string_view cell, std::size_t line) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size())
    throw ParseError(at_line(line) + "non-numeric cell '" + std::string(cell) + "'");
  if (!std::isfinite(v)) throw ParseError(at_line(line) + "non-finite value");
  return v;
}

// Shortest text that parses back to the same double.
void put_real(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

MotionSequence parse_motion_csv(std::string_view text) {
  MotionSequence seq;
  std::size_t joints = 0, channels = 0, line_no = 0;
  std::vector<double> values;
  bool header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (!header) {
      if (cells.size() != 3) throw ParseError(at_line(line_no) + "expected header M,C,unit");
      joints = parse_count(cells[0], line_no, "joint count");
      channels = parse_count(cells[1], line_no, "channel count");
      if (cells[2].empty()) throw ParseError(at_line(line_no) + "missing unit tag");
      seq.unit = std::string(cells[2]);
      header = true;
      continue;
    }
    if (cells.size() != joints * channels)
      throw ParseError(at_line(line_no) + "expected " + std::to_string(joints * channels) + " cells, found " +
                       std::to_string(cells.size()));
    for (auto cell : cells) values.push_back(parse_real(cell, line_no));
  }
  if (!header) throw ParseError("empty motion file");
  if (values.empty()) throw ParseError("motion file has no frames");
  const std::size_t frames = values.size() / (joints * channels);
  seq.frames = Tensor({frames, joints, channels}, std::move(values));
  return seq;
}

MotionSequence load_motion_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_motion_csv(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_motion_csv(std::ostream& out, const MotionSequence& seq) {
  const std::size_t row = seq.joints() * seq.channels();
  out << seq.joints() << ',' << seq.channels() << ',' << seq.unit << '\n';
  const double* p = seq.frames.data();
  for (std::size_t t = 0; t < seq.length(); ++t) {
    for (std::size_t k = 0; k < row; ++k) {
      if (k) out << ',';
      put_real(out, p[t * row + k]);
    }
    out << '\n';
  }
}

void save_motion_csv(const std::filesystem::path& path, const MotionSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_motion_csv(out, seq);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> synth_frequencies(std::size_t joints, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> omega(joints);
  for (std::size_t j = 0; j < joints; j += 2) {
    omega[j] = rng.uniform(0.2, 0.6);
    if (j + 1 < joints) omega[j + 1] = omega[j];
  }
  return omega;
}

MotionSequence synth_generate(const SynthOptions& o) {
  if (o.joints < 2) throw Error("synthetic motion needs at least 2 joints");
  if (o.channels == 0 || o.frames == 0) throw Error("synthetic motion needs channels and frames");
  const auto omega = synth_frequencies(o.joints, o.seed);
  // Separate stream so frequencies do not depend on the channel count.
  Rng rng(o.seed + 1);
  MotionSequence seq;
  seq.unit = "synthetic";
  seq.frames = Tensor({o.frames, o.joints, o.channels});
  for (std::size_t j = 0; j < o.joints; ++j) {
    for (std::size_t c = 0; c < o.channels; ++c) {
      const double base = rng.uniform(-0.5, 0.5);
      const double amp = rng.uniform(0.3, 1.0);
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      const double drift = rng.uniform(-o.drift, o.drift);
      for (std::size_t t = 0; t < o.frames; ++t) {
        const double td = static_cast<double>(t);
        seq.frames(t, j, c) = base + o.amplitude * (amp * std::sin(omega[j] * td + phase) + drift * td);
      }
    }
  }
  return seq;
}

std::vector<WindowPair> extract_windows(const MotionSequence& seq, std::size_t observed,
                                        std::size_t horizon, std::size_t stride) {
  if (observed == 0 || horizon == 0 || stride == 0) throw Error("window sizes and stride must be positive");
  const std::size_t len = seq.length();
  if (len < observed + horizon) return {};
  const std::size_t block = seq.joints() * seq.channels();
  const double* p = seq.frames.data();
  const std::size_t count = (len - observed - horizon) / stride + 1;
  std::vector<WindowPair> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double* start = p + k * stride * block;
    WindowPair w;
    w.observed = Tensor({observed, seq.joints(), seq.channels()},
                        std::vector<double>(start, start + observed * block));
    w.future = Tensor({horizon, seq.joints(), seq.channels()},
                      std::vector<double>(start + observed * block, start + (observed + horizon) * block));
    out.push_back(std::move(w));
  }
  return out;
}

DatasetSplit split_windows(std::vector<WindowPair> windows, double validation_fraction, double test_fraction) {
  if (!(validation_fraction >= 0.0 && test_fraction >= 0.0 && validation_fraction + test_fraction < 1.0))
    throw Error("split fractions must be non-negative and sum below 1");
  const std::size_t n = windows.size();
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_val - n_test;
  DatasetSplit split;
  auto it = std::make_move_iterator(windows.begin());
  split.train.assign(it, it + n_train);
  split.validation.assign(it + n_train, it + n_train + n_val);
  split.test.assign(it + n_train + n_val, std::make_move_iterator(windows.end()));
  return split;
}

MaeReport mae(const Tensor& prediction, const Tensor& truth) {
  if (prediction.shape() != truth.shape() || prediction.rank() != 3)
    throw DimensionError("mae: shapes " + shape_string(prediction.shape()) + " and " +
                         shape_string(truth.shape()) + " differ or are not [T x M x C]");
  const std::size_t frames = prediction.dim(0), joints = prediction.dim(1), channels = prediction.dim(2);
  MaeReport report;
  report.per_horizon.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < joints; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = prediction(t, j, c) - truth(t, j, c);
        sq += d * d;
      }
      acc += std::sqrt(sq);
    }
    report.per_horizon[t] = acc / static_cast<double>(joints);
    report.mean += report.per_horizon[t];
  }
  report.mean /= static_cast<double>(frames);
  return report;
}

}  // namespace mstgnn
