#pragma once

// Brute-force reference implementations written directly from the
// definitions, sharing no code with the library kernels.

#include <vector>

#include "nrsr/sensor.hpp"
#include "nrsr/tensor.hpp"

namespace nrsr::test {

// out[n][o][y][x] = b[o] + sum_{c,i,j} w[o][c][i][j] * in[n][c][y*s+i-p][x*s+j-p]
inline Tensor<double> conv2d_oracle(const Tensor<double>& in, const Tensor<double>& w, const Tensor<double>* bias,
                                    int stride, int pad) {
  const Shape s = in.shape();
  const Shape ws = w.shape();
  const int oh = (s.h + 2 * pad - ws.h) / stride + 1;
  const int ow = (s.w + 2 * pad - ws.w) / stride + 1;
  Tensor<double> out(Shape{s.n, ws.n, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < ws.n; ++o)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          double acc = bias ? bias->at(0, o, 0, 0) : 0.0;
          for (int c = 0; c < s.c; ++c)
            for (int i = 0; i < ws.h; ++i)
              for (int j = 0; j < ws.w; ++j) {
                const int iy = y * stride + i - pad;
                const int ix = x * stride + j - pad;
                if (iy < 0 || ix < 0 || iy >= s.h || ix >= s.w) continue;
                acc += w.at(o, c, i, j) * in.at(n, c, iy, ix);
              }
          out.at(n, o, y, x) = acc;
        }
  return out;
}

// Scatter form of the transposed convolution, weights (in, out, kh, kw).
inline Tensor<double> deconv2d_oracle(const Tensor<double>& in, const Tensor<double>& w, const Tensor<double>* bias,
                                      int stride, int pad) {
  const Shape s = in.shape();
  const Shape ws = w.shape();
  const int oh = (s.h - 1) * stride - 2 * pad + ws.h;
  const int ow = (s.w - 1) * stride - 2 * pad + ws.w;
  Tensor<double> out(Shape{s.n, ws.c, oh, ow});
  for (int n = 0; n < s.n; ++n) {
    for (int o = 0; o < ws.c; ++o)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) out.at(n, o, y, x) = bias ? bias->at(0, o, 0, 0) : 0.0;
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
          for (int o = 0; o < ws.c; ++o)
            for (int i = 0; i < ws.h; ++i)
              for (int j = 0; j < ws.w; ++j) {
                const int oy = y * stride + i - pad;
                const int ox = x * stride + j - pad;
                if (oy < 0 || ox < 0 || oy >= oh || ox >= ow) continue;
                out.at(n, o, oy, ox) += w.at(c, o, i, j) * in.at(n, c, y, x);
              }
  }
  return out;
}

// Sensor value of low-resolution cell (r, c): the mean of the light-sensitive
// pixels of the 2x2 cell at (2r, 2c), from the quadrant definitions.
inline double cell_measurement(const Image& img, const Sensor& sensor, int r, int c) {
  double sum = 0.0;
  int count = 0;
  for (int q = 0; q < 4; ++q) {
    bool sensitive = true;
    if (sensor.kind() == SensorKind::quarter) sensitive = q == sensor.mask()->quadrant(r, c);
    if (sensor.kind() == SensorKind::three_quarter) sensitive = q != sensor.mask()->quadrant(r, c);
    if (!sensitive) continue;
    sum += img.at(2 * r + q / 2, 2 * c + q % 2);
    ++count;
  }
  return sum / count;
}

// Measurements of the 8x8 cells of every 16x16 support block (stride 8,
// 4-pixel zero border), channel = cell row * 8 + cell column.
inline Tensor<double> gather_oracle(const Image& img, const Sensor& sensor) {
  const int bh = img.height / 8;
  const int bw = img.width / 8;
  Tensor<double> out(Shape{1, 64, bh, bw});
  for (int by = 0; by < bh; ++by)
    for (int bx = 0; bx < bw; ++bx)
      for (int cr = 0; cr < 8; ++cr)
        for (int cc = 0; cc < 8; ++cc) {
          // Support origin is 4 pixels (2 cells) above-left of the target block.
          const int r = 4 * by - 2 + cr;
          const int c = 4 * bx - 2 + cc;
          double v = 0.0;
          if (r >= 0 && c >= 0 && 2 * r < img.height && 2 * c < img.width) v = cell_measurement(img, sensor, r, c);
          out.at(0, cr * 8 + cc, by, bx) = v;
        }
  return out;
}

}  // namespace nrsr::test
