#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "nrsr/sensor.hpp"

namespace nrsr {

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& raw_path) {
  return std::filesystem::path(raw_path.string() + ".json");
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

void write_measurements(const MeasurementGrid& grid, const std::filesystem::path& raw_path) {
  std::ofstream raw(raw_path, std::ios::binary | std::ios::trunc);
  if (!raw) throw FormatError("cannot write " + raw_path.string());
  for (float v : grid.values.pixels) {
    std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(v));
    raw.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  if (!raw) throw FormatError("failed writing " + raw_path.string());

  const nlohmann::json meta = {
      {"height", grid.values.height},
      {"width", grid.values.width},
      {"dtype", "float32le"},
      {"sensor", std::string(to_string(grid.sensor))},
      {"mask", grid.mask_reference},
  };
  std::ofstream side(sidecar_path(raw_path), std::ios::trunc);
  if (!side) throw FormatError("cannot write " + sidecar_path(raw_path).string());
  side << meta.dump(2) << "\n";
}

MeasurementGrid read_measurements(const std::filesystem::path& raw_path) {
  std::ifstream side(sidecar_path(raw_path));
  if (!side) throw FormatError("missing sidecar " + sidecar_path(raw_path).string());
  MeasurementGrid grid;
  try {
    const auto meta = nlohmann::json::parse(side);
    if (meta.value("dtype", "float32le") != "float32le") throw FormatError("unsupported dtype");
    const int h = meta.at("height").get<int>();
    const int w = meta.at("width").get<int>();
    if (h < 1 || w < 1) throw FormatError("bad dimensions");
    grid.values = Image(h, w);
    grid.sensor = parse_sensor_kind(meta.at("sensor").get<std::string>());
    grid.mask_reference = meta.value("mask", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad sidecar " + sidecar_path(raw_path).string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError("bad sidecar " + sidecar_path(raw_path).string() + ": " + e.what());
  }

  std::ifstream raw(raw_path, std::ios::binary);
  if (!raw) throw FormatError("cannot open " + raw_path.string());
  for (auto& v : grid.values.pixels) {
    std::uint32_t bits = 0;
    if (!raw.read(reinterpret_cast<char*>(&bits), sizeof(bits))) {
      throw FormatError("truncated measurement file " + raw_path.string());
    }
    v = std::bit_cast<float>(to_le(bits));
  }
  return grid;
}

}  // namespace nrsr
