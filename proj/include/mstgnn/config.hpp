#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mstgnn/model.hpp"
#include "mstgnn/training.hpp"

namespace mstgnn {

/// Everything a training run needs besides data.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Splits flat `key = value` text. '#' starts a comment.
std::vector<ConfigEntry> parse_config_entries(std::string_view text);

/// Builds a config from entries over defaults. Unknown or repeated keys and
/// malformed values raise ParseError naming the line. Without an `edges`
/// key the skeleton is a chain over `joints`.
RunConfig run_config_from_entries(const std::vector<ConfigEntry>& entries);

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Text that parses back to an equal config (doubles use 17 digits).
std::string serialize_run_config(const RunConfig& config);

/// Default run config for a chain of `joints` joints.
RunConfig default_run_config(std::size_t joints = 6);

}  // namespace mstgnn
