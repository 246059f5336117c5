#include "nrsr/sensor.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nrsr {

std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::quarter:
      return "quarter";
    case SensorKind::three_quarter:
      return "three-quarter";
    case SensorKind::low_resolution:
      return "low-resolution";
  }
  return "unknown";
}

std::string_view to_string(MaskKind kind) {
  return kind == MaskKind::quarter ? "quarter" : "three-quarter";
}

SensorKind parse_sensor_kind(std::string_view text) {
  if (text == "quarter" || text == "qs") return SensorKind::quarter;
  if (text == "three-quarter" || text == "tqs") return SensorKind::three_quarter;
  if (text == "low-resolution" || text == "lr") return SensorKind::low_resolution;
  throw std::invalid_argument("unknown sensor kind '" + std::string(text) + "'");
}

MaskKind parse_mask_kind(std::string_view text) {
  if (text == "quarter" || text == "qs") return MaskKind::quarter;
  if (text == "three-quarter" || text == "tqs") return MaskKind::three_quarter;
  throw std::invalid_argument("unknown mask kind '" + std::string(text) + "'");
}

SamplingMask::SamplingMask(MaskKind kind, const Pattern& pattern, std::optional<std::uint64_t> seed)
    : kind_(kind), pattern_(pattern), seed_(seed) {
  for (int r = 0; r < kCells; ++r) {
    for (int c = 0; c < kCells; ++c) {
      if (pattern_[r][c] > 3) throw std::invalid_argument("mask: quadrant index must be 0..3");
      if (pattern_[r][c] != pattern_[r % kPeriodCells][c % kPeriodCells]) {
        throw std::invalid_argument("mask: pattern must repeat every 4 cells (8 pixels)");
      }
    }
  }
}

std::string SamplingMask::digits() const {
  std::string out;
  out.reserve(kCells * kCells);
  for (const auto& row : pattern_) {
    for (auto q : row) out.push_back(static_cast<char>('0' + q));
  }
  return out;
}

std::string SamplingMask::reference() const {
  return seed_ ? "seed:" + std::to_string(*seed_) : "external:" + digits();
}

SamplingMask generate_mask(MaskKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  SamplingMask::Pattern core{};
  for (int r = 0; r < SamplingMask::kPeriodCells; ++r) {
    for (int c = 0; c < SamplingMask::kPeriodCells; ++c) core[r][c] = static_cast<std::uint8_t>(pick(rng));
  }
  SamplingMask::Pattern pattern{};
  for (int r = 0; r < SamplingMask::kCells; ++r) {
    for (int c = 0; c < SamplingMask::kCells; ++c) {
      pattern[r][c] = core[r % SamplingMask::kPeriodCells][c % SamplingMask::kPeriodCells];
    }
  }
  return SamplingMask(kind, pattern, seed);
}

std::string format_mask(const SamplingMask& mask) {
  std::ostringstream out;
  out << "NRSMASK " << to_string(mask.kind()) << ' ';
  if (mask.seed()) {
    out << *mask.seed();
  } else {
    out << "external";
  }
  out << '\n';
  for (const auto& row : mask.pattern()) {
    for (auto q : row) out << static_cast<char>('0' + q);
    out << '\n';
  }
  return out.str();
}

SamplingMask parse_mask(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, kind, seed;
  if (!(in >> magic >> kind >> seed) || magic != "NRSMASK") {
    throw FormatError("mask: expected header 'NRSMASK <kind> <seed>'");
  }
  std::optional<std::uint64_t> parsed_seed;
  if (seed != "external") {
    try {
      std::size_t used = 0;
      parsed_seed = std::stoull(seed, &used);
      if (used != seed.size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
      throw FormatError("mask: bad seed '" + seed + "'");
    }
  }
  SamplingMask::Pattern pattern{};
  for (int r = 0; r < SamplingMask::kCells; ++r) {
    std::string line;
    if (!(in >> line) || line.size() != SamplingMask::kCells) {
      throw FormatError("mask: expected 8 rows of 8 quadrant digits");
    }
    for (int c = 0; c < SamplingMask::kCells; ++c) {
      if (line[c] < '0' || line[c] > '3') throw FormatError("mask: quadrant digits must be 0..3");
      pattern[r][c] = static_cast<std::uint8_t>(line[c] - '0');
    }
  }
  std::string extra;
  if (in >> extra) throw FormatError("mask: trailing content after pattern");
  try {
    return SamplingMask(parse_mask_kind(kind), pattern, parsed_seed);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

void write_mask_file(const SamplingMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write mask file " + path.string());
  out << format_mask(mask);
  if (!out) throw FormatError("failed writing mask file " + path.string());
}

SamplingMask read_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open mask file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mask(buf.str());
}

Sensor Sensor::make(SensorKind kind, std::optional<SamplingMask> mask) {
  if (kind != SensorKind::low_resolution && !mask) {
    throw std::invalid_argument(std::string(to_string(kind)) + " sensor needs a sampling mask");
  }
  if (kind == SensorKind::low_resolution) mask.reset();
  return Sensor(kind, std::move(mask));
}

const SamplingMask& Sensor::require_mask() const {
  if (!mask_) throw std::invalid_argument(std::string(to_string(kind_)) + " sensor has no mask");
  return *mask_;
}

std::string Sensor::mask_reference() const { return mask_ ? mask_->reference() : "none"; }

void require_even_dims(const Image& image, const char* what) {
  if (image.height < 2 || image.width < 2 || image.height % 2 != 0 || image.width % 2 != 0) {
    throw ShapeError(std::string(what) + ": image dimensions must be positive multiples of 2, got " +
                     std::to_string(image.height) + "x" + std::to_string(image.width));
  }
}

Image expand_mask(const SamplingMask& mask, int height, int width) {
  if (height < 2 || width < 2 || height % 2 != 0 || width % 2 != 0) {
    throw ShapeError("expand_mask: dimensions must be positive multiples of 2");
  }
  const bool quarter = mask.kind() == MaskKind::quarter;
  Image b(height, width, quarter ? 0.0f : 1.0f);
  for (int r = 0; r < height / 2; ++r) {
    for (int c = 0; c < width / 2; ++c) {
      const int q = mask.quadrant(r, c);
      b.at(2 * r + quadrant_row(q), 2 * c + quadrant_col(q)) = quarter ? 1.0f : 0.0f;
    }
  }
  return b;
}

Image sample_quarter(const Image& reference, const SamplingMask& mask) {
  require_even_dims(reference, "sample_quarter");
  Image out(reference.height, reference.width);
  for (int r = 0; r < reference.height / 2; ++r) {
    for (int c = 0; c < reference.width / 2; ++c) {
      const int q = mask.quadrant(r, c);
      const int y = 2 * r + quadrant_row(q);
      const int x = 2 * c + quadrant_col(q);
      out.at(y, x) = reference.at(y, x);
    }
  }
  return out;
}

MeasurementGrid sample_three_quarter(const Image& reference, const SamplingMask& mask) {
  require_even_dims(reference, "sample_three_quarter");
  MeasurementGrid grid{Image(reference.height / 2, reference.width / 2), SensorKind::three_quarter,
                       mask.reference()};
  for (int r = 0; r < grid.values.height; ++r) {
    for (int c = 0; c < grid.values.width; ++c) {
      const int covered = mask.quadrant(r, c);
      double sum = 0.0;
      for (int q = 0; q < 4; ++q) {
        if (q != covered) sum += reference.at(2 * r + quadrant_row(q), 2 * c + quadrant_col(q));
      }
      grid.values.at(r, c) = static_cast<float>(sum / 3.0);
    }
  }
  return grid;
}

MeasurementGrid sample_low_resolution(const Image& reference) {
  require_even_dims(reference, "sample_low_resolution");
  MeasurementGrid grid{Image(reference.height / 2, reference.width / 2), SensorKind::low_resolution, "none"};
  for (int r = 0; r < grid.values.height; ++r) {
    for (int c = 0; c < grid.values.width; ++c) {
      const double sum = static_cast<double>(reference.at(2 * r, 2 * c)) + reference.at(2 * r, 2 * c + 1) +
                         reference.at(2 * r + 1, 2 * c) + reference.at(2 * r + 1, 2 * c + 1);
      grid.values.at(r, c) = static_cast<float>(sum / 4.0);
    }
  }
  return grid;
}

MeasurementGrid measure(const Image& reference, const Sensor& sensor) {
  switch (sensor.kind()) {
    case SensorKind::low_resolution:
      return sample_low_resolution(reference);
    case SensorKind::three_quarter:
      return sample_three_quarter(reference, sensor.require_mask());
    case SensorKind::quarter:
      break;
  }
  const SamplingMask& mask = sensor.require_mask();
  require_even_dims(reference, "measure");
  MeasurementGrid grid{Image(reference.height / 2, reference.width / 2), SensorKind::quarter, mask.reference()};
  for (int r = 0; r < grid.values.height; ++r) {
    for (int c = 0; c < grid.values.width; ++c) {
      const int q = mask.quadrant(r, c);
      grid.values.at(r, c) = reference.at(2 * r + quadrant_row(q), 2 * c + quadrant_col(q));
    }
  }
  return grid;
}

Image lift_measurements(const MeasurementGrid& grid, const Sensor& sensor) {
  if (grid.sensor != sensor.kind()) throw std::invalid_argument("lift_measurements: sensor kind mismatch");
  Image out(grid.values.height * 2, grid.values.width * 2);
  for (int r = 0; r < grid.values.height; ++r) {
    for (int c = 0; c < grid.values.width; ++c) {
      const float m = grid.values.at(r, c);
      const int special = sensor.mask() ? sensor.mask()->quadrant(r, c) : -1;
      for (int q = 0; q < 4; ++q) {
        const bool used = sensor.kind() == SensorKind::low_resolution ||
                          (sensor.kind() == SensorKind::quarter ? q == special : q != special);
        if (used) out.at(2 * r + quadrant_row(q), 2 * c + quadrant_col(q)) = m;
      }
    }
  }
  return out;
}

Image upsample_nearest(const Image& low, int factor) {
  Image out(low.height * factor, low.width * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) out.at(y, x) = low.at(y / factor, x / factor);
  }
  return out;
}

template <typename T>
VectorizingKernel<T> build_vectorizing_kernel(const Sensor& sensor) {
  VectorizingKernel<T> kernel;
  kernel.spec = ConvSpec{kSupportSize, kSupportSize, kTargetSize, kTargetSize, kSupportBorder,
                         1, kMeasurementChannels, false};
  kernel.weights = Tensor<T>(Shape{kMeasurementChannels, 1, kSupportSize, kSupportSize});
  constexpr int cells = kSupportSize / 2;
  // The support block starts 4 pixels (2 cells) before its target block.
  constexpr int cell_offset = kSupportBorder / 2;
  for (int cr = 0; cr < cells; ++cr) {
    for (int cc = 0; cc < cells; ++cc) {
      const int channel = cr * cells + cc;
      auto& taps = kernel.taps[channel];
      const int special = sensor.mask() ? sensor.mask()->quadrant(cr - cell_offset, cc - cell_offset) : -1;
      for (int q = 0; q < 4; ++q) {
        const bool used = sensor.kind() == SensorKind::low_resolution ||
                          (sensor.kind() == SensorKind::quarter ? q == special : q != special);
        if (used) taps.push_back({2 * cr + quadrant_row(q), 2 * cc + quadrant_col(q)});
      }
      const T weight = T{1} / static_cast<T>(taps.size());
      for (const auto& tap : taps) kernel.weights.at(channel, 0, tap.y, tap.x) = weight;
    }
  }
  return kernel;
}

template <typename T>
Tensor<T> vectorize(const Tensor<T>& images, const VectorizingKernel<T>& kernel) {
  const Shape& s = images.shape();
  if (s.c != 1) throw ShapeError("vectorize: expected single-channel input, got " + s.str());
  if (s.h % kTargetSize != 0 || s.w % kTargetSize != 0) {
    throw ShapeError("vectorize: image dimensions must be multiples of 8, got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  }
  const ConvSpec& spec = kernel.spec;
  const int oh = spec.conv_out_h(s.h);
  const int ow = spec.conv_out_w(s.w);
  Tensor<T> out(Shape{s.n, kMeasurementChannels, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    const T* img = images.plane(n, 0);
    for (int c = 0; c < kMeasurementChannels; ++c) {
      const auto& taps = kernel.taps[c];
      const double count = static_cast<double>(taps.size());
      T* dst = out.plane(n, c);
      for (int u = 0; u < oh; ++u) {
        for (int v = 0; v < ow; ++v) {
          double sum = 0.0;
          for (const auto& tap : taps) {
            const int y = u * spec.stride_h - spec.pad + tap.y;
            const int x = v * spec.stride_w - spec.pad + tap.x;
            if (y >= 0 && y < s.h && x >= 0 && x < s.w) sum += img[static_cast<std::size_t>(y) * s.w + x];
          }
          dst[static_cast<std::size_t>(u) * ow + v] = static_cast<T>(count == 1.0 ? sum : sum / count);
        }
      }
    }
  }
  return out;
}

std::array<int, kCentralChannels> central_channel_indices() {
  std::array<int, kCentralChannels> idx{};
  constexpr int cells = kSupportSize / 2;
  constexpr int first = kSupportBorder / 2;
  constexpr int last = first + kTargetSize / 2;
  int k = 0;
  for (int r = first; r < last; ++r) {
    for (int c = first; c < last; ++c) idx[k++] = r * cells + c;
  }
  return idx;
}

template VectorizingKernel<float> build_vectorizing_kernel<float>(const Sensor&);
template VectorizingKernel<double> build_vectorizing_kernel<double>(const Sensor&);
template Tensor<float> vectorize<float>(const Tensor<float>&, const VectorizingKernel<float>&);
template Tensor<double> vectorize<double>(const Tensor<double>&, const VectorizingKernel<double>&);

}  // namespace nrsr
