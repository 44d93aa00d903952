#include "mstgnn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

namespace mstgnn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(const ConfigEntry& e, const std::string& msg) {
  throw ParseError("line " + std::to_string(e.line) + ": " + e.key + ": " + msg);
}

template <typename T>
T parse_integer(const ConfigEntry& e, std::string_view s) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) fail(e, "expected an integer, got '" + std::string(s) + "'");
  return v;
}

std::size_t parse_size(const ConfigEntry& e) { return parse_integer<std::size_t>(e, e.value); }

int parse_int(const ConfigEntry& e) { return parse_integer<int>(e, e.value); }

double parse_double(const ConfigEntry& e) {
  double v = 0.0;
  const std::string_view s = e.value;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) fail(e, "expected a number, got '" + e.value + "'");
  return v;
}

bool parse_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  fail(e, "expected true or false, got '" + e.value + "'");
}

std::vector<std::size_t> parse_dims(const ConfigEntry& e) {
  std::vector<std::size_t> dims;
  std::string_view rest = e.value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    dims.push_back(parse_integer<std::size_t>(e, trim(rest.substr(0, comma))));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  if (dims.empty()) fail(e, "expected a comma-separated list");
  return dims;
}

// "0-1 1-2 2-3"
std::vector<std::pair<std::size_t, std::size_t>> parse_edges(const ConfigEntry& e) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::istringstream in(e.value);
  std::string tok;
  while (in >> tok) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos) fail(e, "edge '" + tok + "' is not of the form i-j");
    const std::string_view sv = tok;
    edges.emplace_back(parse_integer<std::size_t>(e, sv.substr(0, dash)),
                       parse_integer<std::size_t>(e, sv.substr(dash + 1)));
  }
  return edges;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ConfigEntry> parse_config_entries(std::string_view text) {
  std::vector<ConfigEntry> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
    ConfigEntry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw ParseError("line " + std::to_string(line_no) + ": missing key");
    out.push_back(std::move(e));
  }
  return out;
}

RunConfig run_config_from_entries(const std::vector<ConfigEntry>& entries) {
  RunConfig c;
  auto& enc = c.model.encoder;
  auto& tr = c.train;
  bool have_edges = false;
  using Setter = std::function<void(const ConfigEntry&)>;
  const std::map<std::string, Setter, std::less<>> setters{
      {"joints", [&](const ConfigEntry& e) { c.model.skeleton.joints = parse_size(e); }},
      {"channels", [&](const ConfigEntry& e) { c.model.skeleton.channels = parse_size(e); }},
      {"edges",
       [&](const ConfigEntry& e) {
         c.model.skeleton.edges = parse_edges(e);
         have_edges = true;
       }},
      {"obs_len", [&](const ConfigEntry& e) { enc.frames = parse_size(e); }},
      {"horizon", [&](const ConfigEntry& e) { c.model.horizon = parse_size(e); }},
      {"diff_order", [&](const ConfigEntry& e) { enc.diff_order = parse_int(e); }},
      {"initial_dim", [&](const ConfigEntry& e) { enc.initial_dim = parse_size(e); }},
      {"layer_dims", [&](const ConfigEntry& e) { enc.layer_dims = parse_dims(e); }},
      {"spatial_scales", [&](const ConfigEntry& e) { enc.spatial_scales = parse_size(e); }},
      {"temporal_scales", [&](const ConfigEntry& e) { enc.temporal_scales = parse_size(e); }},
      {"spatial_hops", [&](const ConfigEntry& e) { enc.spatial_hops = parse_int(e); }},
      {"temporal_hops", [&](const ConfigEntry& e) { enc.temporal_hops = parse_int(e); }},
      {"embed_dim", [&](const ConfigEntry& e) { enc.embed_dim = parse_size(e); }},
      {"conv_order",
       [&](const ConfigEntry& e) {
         if (e.value == "spatial_first") enc.order = ConvOrder::SpatialFirst;
         else if (e.value == "temporal_first") enc.order = ConvOrder::TemporalFirst;
         else fail(e, "expected spatial_first or temporal_first");
       }},
      {"attention",
       [&](const ConfigEntry& e) {
         if (e.value == "graph") c.model.attention = AttentionMode::Graph;
         else if (e.value == "none") c.model.attention = AttentionMode::Disabled;
         else fail(e, "expected graph or none");
       }},
      {"trainable_graphs", [&](const ConfigEntry& e) { c.model.trainable_graphs = parse_bool(e); }},
      {"residual", [&](const ConfigEntry& e) { enc.residual = parse_bool(e); }},
      {"seed", [&](const ConfigEntry& e) { c.model.seed = tr.seed = parse_integer<std::uint64_t>(e, e.value); }},
      {"learning_rate", [&](const ConfigEntry& e) { tr.learning_rate = parse_double(e); }},
      {"batch_size", [&](const ConfigEntry& e) { tr.batch_size = parse_size(e); }},
      {"clip_norm", [&](const ConfigEntry& e) { tr.clip_norm = parse_double(e); }},
      {"clip_mode",
       [&](const ConfigEntry& e) {
         if (e.value == "global") tr.clip_mode = ClipMode::Global;
         else if (e.value == "per_tensor") tr.clip_mode = ClipMode::PerTensor;
         else fail(e, "expected global or per_tensor");
       }},
      {"adam_beta1", [&](const ConfigEntry& e) { tr.beta1 = parse_double(e); }},
      {"adam_beta2", [&](const ConfigEntry& e) { tr.beta2 = parse_double(e); }},
      {"adam_epsilon", [&](const ConfigEntry& e) { tr.epsilon = parse_double(e); }},
      {"epochs", [&](const ConfigEntry& e) { tr.epochs = parse_size(e); }},
      {"loss_alpha", [&](const ConfigEntry& e) { tr.loss.alpha = parse_double(e); }},
      {"loss_beta", [&](const ConfigEntry& e) { tr.loss.beta = parse_double(e); }},
      {"loss_gamma", [&](const ConfigEntry& e) { tr.loss.gamma = parse_double(e); }},
      {"teacher_forcing", [&](const ConfigEntry& e) { tr.teacher_forcing = parse_bool(e); }},
      {"stride", [&](const ConfigEntry& e) { tr.stride = parse_size(e); }},
  };
  std::set<std::string, std::less<>> seen;
  for (const auto& e : entries) {
    const auto it = setters.find(e.key);
    if (it == setters.end()) throw ParseError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    if (!seen.insert(e.key).second) fail(e, "repeated key");
    it->second(e);
  }
  if (!have_edges) c.model.skeleton = SkeletonSpec::chain(c.model.skeleton.joints, c.model.skeleton.channels);
  c.model.validate();
  c.train.validate();
  return c;
}

RunConfig parse_run_config(std::string_view text) { return run_config_from_entries(parse_config_entries(text)); }

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_run_config(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_run_config(const RunConfig& c) {
  const auto& m = c.model;
  const auto& enc = m.encoder;
  const auto& tr = c.train;
  if (m.seed != tr.seed) throw Error("model and shuffle seeds must agree to serialize a config");
  std::ostringstream out;
  out << "joints = " << m.skeleton.joints << '\n';
  out << "channels = " << m.skeleton.channels << '\n';
  out << "edges =";
  for (const auto& [i, j] : m.skeleton.edges) out << ' ' << i << '-' << j;
  out << '\n';
  out << "obs_len = " << enc.frames << '\n';
  out << "horizon = " << m.horizon << '\n';
  out << "diff_order = " << enc.diff_order << '\n';
  out << "initial_dim = " << enc.initial_dim << '\n';
  out << "layer_dims = ";
  for (std::size_t k = 0; k < enc.layer_dims.size(); ++k) out << (k ? "," : "") << enc.layer_dims[k];
  out << '\n';
  out << "spatial_scales = " << enc.spatial_scales << '\n';
  out << "temporal_scales = " << enc.temporal_scales << '\n';
  out << "spatial_hops = " << enc.spatial_hops << '\n';
  out << "temporal_hops = " << enc.temporal_hops << '\n';
  out << "embed_dim = " << enc.embed_dim << '\n';
  out << "conv_order = " << (enc.order == ConvOrder::SpatialFirst ? "spatial_first" : "temporal_first") << '\n';
  out << "attention = " << (m.attention == AttentionMode::Graph ? "graph" : "none") << '\n';
  out << "trainable_graphs = " << (m.trainable_graphs ? "true" : "false") << '\n';
  out << "residual = " << (enc.residual ? "true" : "false") << '\n';
  out << "seed = " << m.seed << '\n';
  out << "learning_rate = " << fmt_double(tr.learning_rate) << '\n';
  out << "batch_size = " << tr.batch_size << '\n';
  out << "clip_norm = " << fmt_double(tr.clip_norm) << '\n';
  out << "clip_mode = " << (tr.clip_mode == ClipMode::Global ? "global" : "per_tensor") << '\n';
  out << "adam_beta1 = " << fmt_double(tr.beta1) << '\n';
  out << "adam_beta2 = " << fmt_double(tr.beta2) << '\n';
  out << "adam_epsilon = " << fmt_double(tr.epsilon) << '\n';
  out << "epochs = " << tr.epochs << '\n';
  out << "loss_alpha = " << fmt_double(tr.loss.alpha) << '\n';
  out << "loss_beta = " << fmt_double(tr.loss.beta) << '\n';
  out << "loss_gamma = " << fmt_double(tr.loss.gamma) << '\n';
  out << "teacher_forcing = " << (tr.teacher_forcing ? "true" : "false") << '\n';
  out << "stride = " << tr.stride << '\n';
  return out.str();
}

RunConfig default_run_config(std::size_t joints) {
  RunConfig c;
  c.model.skeleton = SkeletonSpec::chain(joints);
  return c;
}

}  // namespace mstgnn
