#include "nrsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace nrsr {

namespace {

void require_same_size(const Image& a, const Image& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                     ")");
  }
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// 'valid' separable filtering of a double plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * src[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_size(a, b, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPeak * kPeak / m);
}

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
  require_same_size(a, b, "ssim");
  if (a.height < o.window || a.width < o.window) {
    throw ShapeError("ssim: images must be at least " + std::to_string(o.window) + "x" + std::to_string(o.window));
  }
  const int h = a.height;
  const int w = a.width;
  const std::size_t n = a.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.pixels[i];
    y[i] = b.pixels[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = gaussian_window(o.window, o.sigma);
  const auto mx = filter_valid(x, h, w, g);
  const auto my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g);
  const auto syy = filter_valid(yy, h, w, g);
  const auto sxy = filter_valid(xy, h, w, g);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double cubic_kernel(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

CubicTaps bicubic_taps(int out_index) {
  // Output pixel centre o + 0.5 maps to source coordinate (o + 0.5) / 2 - 0.5.
  const double src = (out_index + 0.5) / 2.0 - 0.5;
  const int base = static_cast<int>(std::floor(src));
  CubicTaps taps;
  taps.first = base - 1;
  for (int i = 0; i < 4; ++i) taps.weights[i] = cubic_kernel(src - (base - 1 + i));
  return taps;
}

Image bicubic_upscale(const Image& low) {
  const int h = low.height;
  const int w = low.width;
  auto clamp_to = [](int v, int n) { return std::clamp(v, 0, n - 1); };
  std::vector<double> rows(static_cast<std::size_t>(h) * 2 * w);
  for (int x = 0; x < 2 * w; ++x) {
    const CubicTaps t = bicubic_taps(x);
    for (int y = 0; y < h; ++y) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += t.weights[i] * low.at(y, clamp_to(t.first + i, w));
      rows[static_cast<std::size_t>(y) * 2 * w + x] = s;
    }
  }
  Image out(2 * h, 2 * w);
  for (int y = 0; y < 2 * h; ++y) {
    const CubicTaps t = bicubic_taps(y);
    for (int x = 0; x < 2 * w; ++x) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += t.weights[i] * rows[static_cast<std::size_t>(clamp_to(t.first + i, h)) * 2 * w + x];
      out.at(y, x) = static_cast<float>(s);
    }
  }
  return out;
}

Image bicubic_upscale(const MeasurementGrid& grid) { return bicubic_upscale(grid.values); }

}  // namespace nrsr
