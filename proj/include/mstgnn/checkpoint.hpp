#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mstgnn/config.hpp"
#include "mstgnn/model.hpp"
#include "mstgnn/training.hpp"

namespace mstgnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  Model model;
  Adam optimizer;
};

/// Binary layout: "MSTG", u32 version, u32 length + config text, then tensor
/// records until end of file (u32 name length, name, u32 rank, u64 extents,
/// little-endian f64 values). Adam moments are stored as "adam.m:<param>" and
/// "adam.v:<param>"; the step counter is the `optimizer_step` config line.
void write_checkpoint(std::ostream& out, const RunConfig& config, const Model& model, const Adam& optimizer);
void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Model& model,
                     const Adam& optimizer);

Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mstgnn
