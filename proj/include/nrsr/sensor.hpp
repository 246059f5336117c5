#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nrsr/autograd.hpp"
#include "nrsr/image.hpp"

namespace nrsr {

enum class SensorKind { quarter, three_quarter, low_resolution };
enum class MaskKind { quarter, three_quarter };

std::string_view to_string(SensorKind kind);
std::string_view to_string(MaskKind kind);
/// Accepts "quarter"/"qs", "three-quarter"/"tqs", "low-resolution"/"lr".
SensorKind parse_sensor_kind(std::string_view text);
MaskKind parse_mask_kind(std::string_view text);

// Quadrant indices within a 2x2 high-resolution cell.
//   0 = top-left, 1 = top-right, 2 = bottom-left, 3 = bottom-right
inline int quadrant_row(int q) { return q / 2; }
inline int quadrant_col(int q) { return q % 2; }

/// Quadrant pattern over the 8x8 low-resolution cells of a 16x16 HR tile.
/// For a quarter mask the entry names the measured quadrant, for a
/// three-quarter mask the covered one. The pattern repeats every 4 cells
/// (8 HR pixels) in both directions.
class SamplingMask {
 public:
  static constexpr int kCells = 8;
  static constexpr int kPeriodCells = 4;
  static constexpr int kPeriodPixels = 2 * kPeriodCells;
  using Pattern = std::array<std::array<std::uint8_t, kCells>, kCells>;

  /// Throws std::invalid_argument for entries outside 0..3 or a pattern that
  /// is not 4-cell periodic. An empty seed marks an externally supplied mask.
  SamplingMask(MaskKind kind, const Pattern& pattern, std::optional<std::uint64_t> seed = std::nullopt);

  MaskKind kind() const { return kind_; }
  const Pattern& pattern() const { return pattern_; }
  const std::optional<std::uint64_t>& seed() const { return seed_; }

  /// Quadrant at an arbitrary (possibly negative) low-resolution cell.
  int quadrant(int cell_row, int cell_col) const {
    return pattern_[mod(cell_row)][mod(cell_col)];
  }

  /// "seed:<n>" for generated masks, "external:<digits>" otherwise.
  std::string reference() const;
  /// The 64 quadrant digits row-major, as written in mask files.
  std::string digits() const;

  friend bool operator==(const SamplingMask& a, const SamplingMask& b) {
    return a.kind_ == b.kind_ && a.pattern_ == b.pattern_;
  }

 private:
  static int mod(int v) { return ((v % kCells) + kCells) % kCells; }

  MaskKind kind_;
  Pattern pattern_;
  std::optional<std::uint64_t> seed_;
};

/// Draws one quadrant per cell uniformly from a seeded generator.
SamplingMask generate_mask(MaskKind kind, std::uint64_t seed);

// Mask files:
//   NRSMASK <quarter|three-quarter> <seed|external>
//   eight lines of eight quadrant digits
std::string format_mask(const SamplingMask& mask);
SamplingMask parse_mask(std::string_view text);
void write_mask_file(const SamplingMask& mask, const std::filesystem::path& path);
SamplingMask read_mask_file(const std::filesystem::path& path);

/// A sensor model: kind plus the mask it needs (none for low resolution).
class Sensor {
 public:
  static Sensor low_resolution() { return Sensor(SensorKind::low_resolution, std::nullopt); }
  static Sensor quarter(SamplingMask mask) { return Sensor(SensorKind::quarter, std::move(mask)); }
  static Sensor three_quarter(SamplingMask mask) { return Sensor(SensorKind::three_quarter, std::move(mask)); }
  /// Throws std::invalid_argument when a non-regular kind comes without mask.
  static Sensor make(SensorKind kind, std::optional<SamplingMask> mask);

  SensorKind kind() const { return kind_; }
  const std::optional<SamplingMask>& mask() const { return mask_; }
  const SamplingMask& require_mask() const;
  std::string mask_reference() const;

 private:
  Sensor(SensorKind kind, std::optional<SamplingMask> mask) : kind_(kind), mask_(std::move(mask)) {}

  SensorKind kind_;
  std::optional<SamplingMask> mask_;
};

/// One value per low-resolution sensor pixel.
struct MeasurementGrid {
  Image values;
  SensorKind sensor = SensorKind::low_resolution;
  std::string mask_reference;
};

/// Binary HR mask b: 1 at measured (quarter) or uncovered (three-quarter)
/// positions. Odd dimensions are rejected.
Image expand_mask(const SamplingMask& mask, int height, int width);

/// f * b with the pattern read as measured quadrants.
Image sample_quarter(const Image& reference, const SamplingMask& mask);
/// Mean of the three uncovered pixels of every 2x2 cell.
MeasurementGrid sample_three_quarter(const Image& reference, const SamplingMask& mask);
/// Mean of every 2x2 cell.
MeasurementGrid sample_low_resolution(const Image& reference);
/// Sensor readout for any kind; for quarter sampling the measured pixel.
MeasurementGrid measure(const Image& reference, const Sensor& sensor);

/// An HR image whose sensor readout reproduces `grid` exactly (measurement
/// values placed on every contributing pixel, zeros elsewhere). Lets real
/// sensor data be fed through networks that take an HR input.
Image lift_measurements(const MeasurementGrid& grid, const Sensor& sensor);

Image upsample_nearest(const Image& low, int factor);

// Vectorizing convolution: 64 output channels, 16x16 kernel, stride 8, pad 4.
inline constexpr int kSupportSize = 16;
inline constexpr int kTargetSize = 8;
inline constexpr int kSupportBorder = 4;
inline constexpr int kMeasurementChannels = kSupportSize * kSupportSize / 4;
inline constexpr int kCentralChannels = kTargetSize * kTargetSize / 4;

struct KernelTap {
  int y;
  int x;
};

template <typename T>
struct VectorizingKernel {
  /// Dense (64, 1, 16, 16) weights for the differentiable conv2d path.
  Tensor<T> weights;
  ConvSpec spec;
  /// Contributing kernel positions per channel; the measurement is their mean.
  std::array<std::vector<KernelTap>, kMeasurementChannels> taps;
};

/// Channel c = support-cell row * 8 + column holds that cell's measurement:
/// weight 1 on the measured pixel (quarter), 1/3 on the three uncovered
/// pixels (three-quarter) or 1/4 on all four (low resolution).
template <typename T>
VectorizingKernel<T> build_vectorizing_kernel(const Sensor& sensor);

/// (N,1,H,W) with H, W multiples of 8 -> (N,64,H/8,W/8). Evaluates the tap
/// means in double precision so that integer-valued inputs reproduce the
/// sensor readout bit for bit.
template <typename T>
Tensor<T> vectorize(const Tensor<T>& images, const VectorizingKernel<T>& kernel);

/// Channels of the 16 cells inside the central 8x8 target block, ascending.
std::array<int, kCentralChannels> central_channel_indices();

void require_even_dims(const Image& image, const char* what);

}  // namespace nrsr

namespace nrsr {

// Measurement files: row-major float32 little-endian values in `raw_path`
// plus a JSON sidecar at raw_path + ".json" holding height, width, sensor
// kind and mask reference.
void write_measurements(const MeasurementGrid& grid, const std::filesystem::path& raw_path);
MeasurementGrid read_measurements(const std::filesystem::path& raw_path);

}  // namespace nrsr
