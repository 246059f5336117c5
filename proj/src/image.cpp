#include "nrsr/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace nrsr {

namespace {

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

int parse_positive(const std::string& token, const std::filesystem::path& path) {
  try {
    const int v = std::stoi(token);
    if (v > 0) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("bad netpbm header in " + path.string());
}

PnmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  PnmHeader h;
  h.magic = next_token(in);
  h.width = parse_positive(next_token(in), path);
  h.height = parse_positive(next_token(in), path);
  h.maxval = parse_positive(next_token(in), path);
  if (h.maxval > 255) throw FormatError("only 8-bit netpbm files are supported: " + path.string());
  return h;
}

std::vector<std::uint8_t> read_payload(std::istream& in, std::size_t bytes, const std::filesystem::path& path) {
  std::vector<std::uint8_t> data(bytes);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes))) {
    throw FormatError("truncated image data in " + path.string());
  }
  return data;
}

float rescale(std::uint8_t v, int maxval) {
  return maxval == 255 ? static_cast<float>(v) : static_cast<float>(v) * 255.0f / static_cast<float>(maxval);
}

}  // namespace

Image to_grayscale(const RgbImage& rgb) {
  Image out(rgb.height, rgb.width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = rgb.rgb[3 * i];
    const double g = rgb.rgb[3 * i + 1];
    const double b = rgb.rgb[3 * i + 2];
    out.pixels[i] = static_cast<float>(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return out;
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P5") throw FormatError("not a binary PGM (P5): " + path.string());
  const auto data = read_payload(in, static_cast<std::size_t>(h.width) * h.height, path);
  Image img(h.height, h.width);
  for (std::size_t i = 0; i < data.size(); ++i) img.pixels[i] = rescale(data[i], h.maxval);
  return img;
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  std::vector<char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const float v = std::clamp(std::round(image.pixels[i]), 0.0f, 255.0f);
    bytes[i] = static_cast<char>(static_cast<std::uint8_t>(v));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const PnmHeader h = read_header(in, path);
  if (h.magic != "P6") throw FormatError("not a binary PPM (P6): " + path.string());
  RgbImage img{h.height, h.width, read_payload(in, static_cast<std::size_t>(h.width) * h.height * 3, path)};
  if (h.maxval != 255) {
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(std::lround(rescale(v, h.maxval)));
  }
  return img;
}

Image read_grayscale(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (magic[0] == 'P' && magic[1] == '6') return to_grayscale(read_ppm(path));
  throw FormatError("unsupported image format (expected P5 or P6): " + path.string());
}

Image crop(const Image& image, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || height < 1 || width < 1 || y0 + height > image.height || x0 + width > image.width) {
    throw ShapeError("crop window outside image");
  }
  Image out(height, width);
  for (int y = 0; y < height; ++y) {
    std::copy_n(&image.pixels[static_cast<std::size_t>(y0 + y) * image.width + x0], width,
                &out.pixels[static_cast<std::size_t>(y) * width]);
  }
  return out;
}

Image reflect_pad_to_multiple(const Image& image, int multiple) {
  const int h = (image.height + multiple - 1) / multiple * multiple;
  const int w = (image.width + multiple - 1) / multiple * multiple;
  auto mirror = [](int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    return i < n ? i : period - i;
  };
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(y, x) = image.at(mirror(y, image.height), mirror(x, image.width));
  }
  return out;
}

template <typename T>
Tensor<T> to_tensor(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("to_tensor: no images");
  const int h = images.front().height;
  const int w = images.front().width;
  Tensor<T> t(Shape{static_cast<int>(images.size()), 1, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    if (images[n].height != h || images[n].width != w) throw ShapeError("to_tensor: images differ in size");
    T* dst = t.plane(static_cast<int>(n), 0);
    for (std::size_t i = 0; i < images[n].size(); ++i) dst[i] = static_cast<T>(images[n].pixels[i]);
  }
  return t;
}

template <typename T>
Image image_from_tensor(const Tensor<T>& tensor, int index) {
  const Shape& s = tensor.shape();
  if (s.c != 1 || index < 0 || index >= s.n) throw ShapeError("image_from_tensor: expected (N,1,H,W)");
  Image img(s.h, s.w);
  const T* src = tensor.plane(index, 0);
  for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(src[i]);
  return img;
}

template Tensor<float> to_tensor<float>(std::span<const Image>);
template Tensor<double> to_tensor<double>(std::span<const Image>);
template Image image_from_tensor<float>(const Tensor<float>&, int);
template Image image_from_tensor<double>(const Tensor<double>&, int);

}  // namespace nrsr
