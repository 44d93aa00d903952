#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mstgnn/tensor.hpp"
#include "mstgnn/training.hpp"

namespace mstgnn {

/// A motion clip stored as [T x M x C].
struct MotionSequence {
  std::string unit = "raw";
  Tensor frames;

  std::size_t length() const { return frames.dim(0); }
  std::size_t joints() const { return frames.dim(1); }
  std::size_t channels() const { return frames.dim(2); }
};

/// CSV with header `M,C,unit` and one joint-major row per frame.
MotionSequence parse_motion_csv(std::string_view text);
MotionSequence load_motion_csv(const std::filesystem::path& path);
void write_motion_csv(std::ostream& out, const MotionSequence& seq);
void save_motion_csv(const std::filesystem::path& path, const MotionSequence& seq);

struct SynthOptions {
  std::size_t joints = 6;
  std::size_t channels = 3;
  std::size_t frames = 200;
  std::uint64_t seed = 0;
  double amplitude = 1.0;  ///< scales every oscillation; 0 gives a constant clip
  double drift = 1e-3;     ///< bound on the per-channel linear drift rate
};

/// Sinusoidal chain motion. Joints 2k and 2k+1 share a frequency.
MotionSequence synth_generate(const SynthOptions& options);

/// Angular frequency (radians per frame) used for a joint by synth_generate.
std::vector<double> synth_frequencies(std::size_t joints, std::uint64_t seed);

/// floor((len - T - dT) / stride) + 1 consecutive (observed, future) pairs.
std::vector<WindowPair> extract_windows(const MotionSequence& seq, std::size_t observed,
                                        std::size_t horizon, std::size_t stride);

struct DatasetSplit {
  std::vector<WindowPair> train;
  std::vector<WindowPair> validation;
  std::vector<WindowPair> test;
};

/// Contiguous split in window order; the tail goes to validation then test.
DatasetSplit split_windows(std::vector<WindowPair> windows, double validation_fraction,
                           double test_fraction);

struct MaeReport {
  std::vector<double> per_horizon;
  double mean = 0.0;
};

/// Per horizon frame: mean over joints of the l2 norm of the channel error.
MaeReport mae(const Tensor& prediction, const Tensor& truth);

}  // namespace mstgnn
