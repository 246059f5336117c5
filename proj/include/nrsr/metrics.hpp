#pragma once

#include <array>

#include "nrsr/image.hpp"
#include "nrsr/sensor.hpp"

namespace nrsr {

inline constexpr double kPeak = 255.0;

/// Mean squared difference; throws ShapeError on a size mismatch.
double mse(const Image& a, const Image& b);

/// 10 log10(255^2 / MSE); +infinity for identical images.
double psnr(const Image& a, const Image& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = kPeak;
};

/// Mean of the SSIM map over all positions where the Gaussian window fits
/// entirely inside the image. Both sides must be at least window x window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double t);

/// The four taps used for output sample `out_index` when upscaling by 2 with
/// half-pixel alignment: source index of the first tap and the weights.
struct CubicTaps {
  int first = 0;
  std::array<double, 4> weights{};
};
CubicTaps bicubic_taps(int out_index);

/// Separable bicubic 2x upscaling with edge clamping.
Image bicubic_upscale(const Image& low);
/// Treats the measurement grid as a regular low-resolution image.
Image bicubic_upscale(const MeasurementGrid& grid);

}  // namespace nrsr
