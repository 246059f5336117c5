#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "nrsr/checkpoint.hpp"
#include "nrsr/lfcr.hpp"
#include "nrsr/vdsr.hpp"

namespace nrsr {

/// A checkpoint that does not fit the requested sensor or mask.
class CompatibilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Stage { lfcr, full };
Stage parse_stage(std::string_view text);

/// Independent seed for one consumer (stream) of a user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// LFCR followed, when trained, by the VDSR enhancer.
class Pipeline {
 public:
  static Pipeline create(const Sensor& sensor, std::uint64_t seed);

  const Sensor& sensor() const { return lfcr_.sensor(); }
  LfcrNet<float>& lfcr() { return lfcr_; }
  const LfcrNet<float>& lfcr() const { return lfcr_; }
  VdsrNet<float>& vdsr() { return vdsr_; }
  const VdsrNet<float>& vdsr() const { return vdsr_; }
  bool has_vdsr() const { return has_vdsr_; }
  void set_has_vdsr(bool value) { has_vdsr_ = value; }

  /// Simulates the sensor on `reference` and reconstructs. Any size with even
  /// dimensions works: the input is mirror-padded to a multiple of 16 and the
  /// result cropped back.
  Image reconstruct(const Image& reference, Stage stage) const;
  /// Reconstructs real sensor readout.
  Image reconstruct(const MeasurementGrid& grid, Stage stage) const;

  /// Parameters plus sensor metadata; VDSR records only when has_vdsr().
  Checkpoint to_checkpoint() const;
  /// Throws CompatibilityError if `expected` is given and differs from the
  /// stored sensor kind or mask. Blocks absent from the checkpoint (an
  /// untrained VDSR) keep the initialization drawn from `seed`.
  static Pipeline from_checkpoint(const Checkpoint& checkpoint, const std::optional<Sensor>& expected = std::nullopt,
                                  std::uint64_t seed = 0);

 private:
  Pipeline(LfcrNet<float> lfcr, VdsrNet<float> vdsr) : lfcr_(std::move(lfcr)), vdsr_(std::move(vdsr)) {}

  LfcrNet<float> lfcr_;
  VdsrNet<float> vdsr_;
  bool has_vdsr_ = false;
};

/// Sensor and mask recorded in checkpoint metadata.
void store_sensor(Checkpoint& checkpoint, const Sensor& sensor);
Sensor stored_sensor(const Checkpoint& checkpoint);
void check_compatible(const Checkpoint& checkpoint, const Sensor& sensor);

}  // namespace nrsr
