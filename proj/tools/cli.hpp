#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrsr/pipeline.hpp"
#include "nrsr/train.hpp"

namespace nrsr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Bad flags, files or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::uint64_t seed = 1;
  int threads = 0;  // 0: NRSR_THREADS or 1
};

/// Sensor from a kind name plus either a mask file or a mask generated from
/// `seed`. Low resolution ignores both.
Sensor resolve_sensor(const std::string& kind, const std::string& mask_file, std::uint64_t seed);

struct MaskHistogram {
  std::array<int, 4> counts{};
};
MaskHistogram quadrant_histogram(const SamplingMask& mask);

// Training with per-epoch checkpoints and resume.
struct TrainRequest {
  std::optional<Sensor> sensor;  // required unless resuming
  std::filesystem::path data;
  std::filesystem::path out;
  TrainConfig config;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the config file
  bool resume = false;
  bool quiet = false;
};

struct TrainOutcome {
  std::filesystem::path model;
  std::size_t samples = 0;
};

/// Runs phase 1 and phase 2. On a numerical failure rethrows NumericalError
/// with the last good checkpoint in the message.
TrainOutcome run_training(const TrainRequest& request);

std::filesystem::path last_checkpoint_path(const std::filesystem::path& out);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace nrsr::cli
