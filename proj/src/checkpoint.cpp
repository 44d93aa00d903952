#include "mstgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace mstgnn {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'T', 'G'};
constexpr std::string_view kStepKey = "optimizer_step";

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) put_u64(out, e);
  for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

bool get_bytes(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint64_t get_uint(std::istream& in, int bytes, const char* what) {
  unsigned char b[8];
  if (!get_bytes(in, reinterpret_cast<char*>(b), bytes)) throw IoError(std::string("truncated checkpoint: ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string get_string(std::istream& in, std::size_t n, const char* what) {
  std::string s(n, '\0');
  if (n && !get_bytes(in, s.data(), n)) throw IoError(std::string("truncated checkpoint: ") + what);
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const RunConfig& config, const Model& model, const Adam& optimizer) {
  if (!(config.model.seed == model.config().seed && config.model.skeleton == model.config().skeleton))
    throw Error("checkpoint config does not describe the model");
  const std::string text =
      serialize_run_config(config) + std::string(kStepKey) + " = " + std::to_string(optimizer.steps()) + "\n";
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const auto& store = model.params();
  for (ParamId id = 0; id < store.size(); ++id) put_tensor(out, store[id].name(), store[id].value());
  const auto& m = optimizer.first_moments();
  const auto& v = optimizer.second_moments();
  for (ParamId id = 0; id < store.size() && id < m.size(); ++id) {
    if (m[id].empty()) continue;
    put_tensor(out, "adam.m:" + store[id].name(), m[id]);
    put_tensor(out, "adam.v:" + store[id].name(), v[id]);
  }
  if (!out) throw IoError("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Model& model,
                     const Adam& optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, config, model, optimizer);
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!get_bytes(in, magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint (bad magic)");
  const auto version = get_uint(in, 4, "version");
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const std::string text = get_string(in, get_uint(in, 4, "config length"), "config text");

  auto entries = parse_config_entries(text);
  std::size_t steps = 0;
  std::erase_if(entries, [&](const ConfigEntry& e) {
    if (e.key != kStepKey) return false;
    steps = std::stoull(e.value);
    return true;
  });
  RunConfig config = run_config_from_entries(entries);
  Checkpoint ck{config, Model(config.model), Adam{}};
  ParameterStore& store = ck.model.params();
  std::map<std::string, ParamId, std::less<>> by_name;
  for (ParamId id = 0; id < store.size(); ++id) by_name.emplace(store[id].name(), id);
  auto& moments_m = ck.optimizer.first_moments();
  auto& moments_v = ck.optimizer.second_moments();
  moments_m.assign(store.size(), Tensor{});
  moments_v.assign(store.size(), Tensor{});

  std::vector<bool> loaded(store.size(), false);
  while (in.peek() != std::char_traits<char>::eof()) {
    const std::string name = get_string(in, get_uint(in, 4, "name length"), "record name");
    const auto rank = get_uint(in, 4, "rank");
    if (rank > 8) throw IoError("implausible rank in record " + name);
    Shape shape(rank);
    for (auto& e : shape) e = get_uint(in, 8, "extent");
    Tensor* target = nullptr;
    std::string_view key = name;
    std::vector<Tensor>* moments = nullptr;
    if (key.starts_with("adam.m:")) moments = &moments_m, key.remove_prefix(7);
    else if (key.starts_with("adam.v:")) moments = &moments_v, key.remove_prefix(7);
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw IoError("checkpoint record '" + name + "' matches no parameter");
    const Shape& expected = store[it->second].value().shape();
    if (shape != expected)
      throw IoError("checkpoint record '" + name + "' has shape " + shape_string(shape) + ", expected " +
                    shape_string(expected));
    if (moments) {
      (*moments)[it->second] = Tensor(shape);
      target = &(*moments)[it->second];
    } else {
      target = &store[it->second].value();
      loaded[it->second] = true;
    }
    for (double& v : target->values()) v = std::bit_cast<double>(get_uint(in, 8, "values"));
  }
  for (ParamId id = 0; id < store.size(); ++id)
    if (!loaded[id]) throw IoError("checkpoint lacks parameter " + store[id].name());
  for (ParamId id = 0; id < store.size(); ++id)
    if (moments_m[id].empty() != moments_v[id].empty())
      throw IoError("checkpoint has unpaired Adam moments for " + store[id].name());
  ck.optimizer.set_steps(steps);
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace mstgnn
