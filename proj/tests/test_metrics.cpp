#include <cmath>
#include <random>

#include "doctest.h"
#include "nrsr/metrics.hpp"
#include "synthetic.hpp"

using namespace nrsr;

TEST_CASE("grayscale conversion") {
  RgbImage rgb{1, 4, {255, 0, 0, 255, 255, 255, 37, 37, 37, 0, 0, 0}};
  const Image g = to_grayscale(rgb);
  CHECK(g.at(0, 0) == doctest::Approx(76.245).epsilon(1e-7));
  CHECK(g.at(0, 1) == doctest::Approx(255.0).epsilon(1e-7));
  CHECK(g.at(0, 2) == doctest::Approx(37.0).epsilon(1e-7));
  CHECK(g.at(0, 3) == 0.0f);
}

TEST_CASE("PSNR closed forms") {
  const Image a = test::synthetic_image(32, 32, 1);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0);
  Image b(32, 32, 100.0f);
  Image c(32, 32, 116.0f);
  CHECK(psnr(b, c) == doctest::Approx(20.0 * std::log10(255.0 / 16.0)));
  CHECK(std::abs(psnr(b, c) - 24.05) <= 0.01);
  CHECK_THROWS_AS(psnr(b, Image(32, 16)), ShapeError);
}

TEST_CASE("PSNR shift under a 219/255 rescale of the difference") {
  const Image ref = test::synthetic_image(40, 40, 2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 6.0);
  Image wide = ref;
  Image narrow = ref;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = noise(rng);
    wide.pixels[i] = static_cast<float>(ref.pixels[i] + d);
    narrow.pixels[i] = static_cast<float>(ref.pixels[i] + d * 219.0 / 255.0);
  }
  const double gain = psnr(ref, narrow) - psnr(ref, wide);
  CHECK(gain == doctest::Approx(20.0 * std::log10(255.0 / 219.0)).epsilon(1e-4));
  CHECK(std::round(gain * 100.0) / 100.0 == 1.32);
}

TEST_CASE("PSNR decreases with noise variance") {
  const Image ref = test::synthetic_image(32, 32, 4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> draws(ref.size());
  for (auto& d : draws) d = unit(rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    Image noisy = ref;
    for (std::size_t i = 0; i < ref.size(); ++i) noisy.pixels[i] = static_cast<float>(ref.pixels[i] + sigma * draws[i]);
    const double p = psnr(ref, noisy);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("SSIM properties") {
  const Image a = test::synthetic_image(32, 40, 6);
  const Image b = test::synthetic_image(32, 40, 7);
  CHECK(std::abs(ssim(a, a) - 1.0) <= 1e-12);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) >= -1.0);
  CHECK(ssim(a, b) <= 1.0);
  Image inverted = a;
  for (auto& v : inverted.pixels) v = 255.0f - v;
  const double inv = ssim(a, inverted);
  CHECK(inv >= -1.0);
  CHECK(inv < 0.0);
  Image nudged = a;
  nudged.at(16, 20) += 1.0f;
  CHECK(1.0 - ssim(a, nudged) > 1e-9);
  CHECK_THROWS_AS(ssim(Image(10, 20), Image(10, 20)), ShapeError);
}

TEST_CASE("SSIM of constant images reduces to the luminance term") {
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double expected = (2.0 * 100.0 * 110.0 + c1) / (100.0 * 100.0 + 110.0 * 110.0 + c1);
  CHECK(std::abs(ssim(Image(16, 16, 100.0f), Image(16, 16, 110.0f)) - expected) <= 1e-9);
}

TEST_CASE("cubic kernel and taps") {
  CHECK(cubic_kernel(0.0) == 1.0);
  CHECK(cubic_kernel(1.0) == 0.0);
  CHECK(cubic_kernel(2.0) == 0.0);
  CHECK(cubic_kernel(2.5) == 0.0);
  CHECK(cubic_kernel(0.5) == cubic_kernel(-0.5));
  for (int o = 0; o < 16; ++o) {
    const CubicTaps t = bicubic_taps(o);
    double sum = 0.0;
    double first_moment = 0.0;
    for (int k = 0; k < 4; ++k) {
      sum += t.weights[k];
      first_moment += t.weights[k] * (t.first + k);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    // Half-pixel alignment: output o samples source position (o + 0.5) / 2 - 0.5.
    CHECK(first_moment == doctest::Approx((o + 0.5) / 2.0 - 0.5));
  }
}

TEST_CASE("bicubic upscale of constants and ramps") {
  const Image up = bicubic_upscale(Image(6, 5, 100.0f));
  CHECK(up.height == 12);
  CHECK(up.width == 10);
  for (float v : up.pixels) CHECK(std::abs(v - 100.0f) <= 1e-4f);

  Image ramp(4, 12);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 12; ++x) ramp.at(y, x) = static_cast<float>(3 * x + 7);
  const Image r = bicubic_upscale(ramp);
  // Interior samples whose four taps stay inside the row.
  for (int y = 0; y < 8; ++y)
    for (int ox = 4; ox < 20; ++ox) {
      const double src = (ox + 0.5) / 2.0 - 0.5;
      CHECK(r.at(y, ox) == doctest::Approx(3.0 * src + 7.0).epsilon(1e-6));
    }
}

TEST_CASE("bicubic after low-resolution sampling converges on a smooth quadratic") {
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {16, 32, 64, 128}) {
    Image q(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double u = (x + 0.5) / n;
        const double v = (y + 0.5) / n;
        q.at(y, x) = static_cast<float>(40.0 + 120.0 * u * u + 60.0 * u * v + 30.0 * v);
      }
    const Image est = bicubic_upscale(sample_low_resolution(q));
    double worst = 0.0;
    for (int y = 4; y < n - 4; ++y)
      for (int x = 4; x < n - 4; ++x) worst = std::max(worst, std::abs(static_cast<double>(est.at(y, x) - q.at(y, x))));
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 0.05);
}
