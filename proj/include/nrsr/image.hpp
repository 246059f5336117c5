#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nrsr/tensor.hpp"

namespace nrsr {

/// Grayscale raster on the high-resolution grid, values nominally 0..255.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }

  friend bool operator==(const Image&, const Image&) = default;
};

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // interleaved R,G,B
};

/// BT.601 luma 0.299 R + 0.587 G + 0.114 B, kept as float.
Image to_grayscale(const RgbImage& rgb);

// Binary netpbm I/O. PGM writes round and clamp to 0..255.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const Image& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);
/// Reads a P5 image directly or converts a P6 image to grayscale.
Image read_grayscale(const std::filesystem::path& path);

Image crop(const Image& image, int y0, int x0, int height, int width);
/// Symmetric (edge-mirrored, edge pixel not repeated) padding on the bottom
/// and right until both dimensions are multiples of `multiple`.
Image reflect_pad_to_multiple(const Image& image, int multiple);

/// Stacks equally sized images into an (N,1,H,W) tensor.
template <typename T>
Tensor<T> to_tensor(std::span<const Image> images);
template <typename T>
Tensor<T> to_tensor(const Image& image) {
  return to_tensor<T>(std::span<const Image>(&image, 1));
}
template <typename T>
Image image_from_tensor(const Tensor<T>& tensor, int index = 0);

}  // namespace nrsr
