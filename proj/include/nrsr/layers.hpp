#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "nrsr/optim.hpp"

namespace nrsr {

/// Network inputs and outputs are on the 0..255 scale; inside the networks
/// pixel values are divided by 255 and centred, v / 255 - 0.5.
inline constexpr double kPixelScale = 255.0;
inline constexpr double kPixelCentre = 0.5;

template <typename T>
Var<T> normalize_pixels(const Var<T>& v) {
  return affine(v, static_cast<T>(1.0 / kPixelScale), static_cast<T>(-kPixelCentre));
}

template <typename T>
Var<T> denormalize_pixels(const Var<T>& v) {
  return affine(v, static_cast<T>(kPixelScale), static_cast<T>(kPixelCentre * kPixelScale));
}

/// Initial PReLU slope.
inline constexpr double kInitialSlope = 0.25;

/// A convolution-style layer: weights, optional bias and PReLU slopes.
template <typename T>
struct ConvLayer {
  std::string name;
  ConvSpec spec;
  bool transposed = false;
  Var<T> weight;
  Var<T> bias;
  Var<T> slopes;  // null when no activation follows
};

/// He-normal weights (std = sqrt(2 / fan_in)), zero bias, slopes 0.25.
template <typename T>
ConvLayer<T> make_conv_layer(std::string name, const ConvSpec& spec, bool transposed, bool activation,
                             std::mt19937_64& rng) {
  spec.validate();
  ConvLayer<T> layer{std::move(name), spec, transposed, nullptr, nullptr, nullptr};
  const Shape wshape = transposed ? Shape{spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w}
                                  : Shape{spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w};
  // A transposed layer with stride s sees (k/s)^2 inputs per output pixel.
  const double fan_in = transposed ? static_cast<double>(spec.in_channels) * (spec.kernel_h / spec.stride_h) *
                                         (spec.kernel_w / spec.stride_w)
                                   : static_cast<double>(spec.in_channels) * spec.kernel_h * spec.kernel_w;
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  Tensor<T> w(wshape);
  for (auto& v : w.values()) v = static_cast<T>(normal(rng));
  layer.weight = parameter(std::move(w));
  layer.bias = parameter(Tensor<T>(Shape{1, spec.out_channels, 1, 1}));
  if (activation) {
    layer.slopes = parameter(Tensor<T>(Shape{1, spec.out_channels, 1, 1}, static_cast<T>(kInitialSlope)));
  }
  return layer;
}

template <typename T>
Var<T> apply_layer(const ConvLayer<T>& layer, const Var<T>& input) {
  Var<T> out = layer.transposed ? deconv2d(input, layer.weight, layer.bias, layer.spec)
                                : conv2d(input, layer.weight, layer.bias, layer.spec);
  return layer.slopes ? prelu(out, layer.slopes) : out;
}

template <typename T>
void append_parameters(ParameterList<T>& params, const ConvLayer<T>& layer, bool trainable = true) {
  params.push_back({layer.name + "/weight", layer.weight, trainable});
  if (layer.bias) params.push_back({layer.name + "/bias", layer.bias, trainable});
  if (layer.slopes) params.push_back({layer.name + "/prelu", layer.slopes, trainable});
}

template <typename U, typename T>
Var<U> cast_var(const Var<T>& v) {
  if (!v) return nullptr;
  auto out = constant(v->value.template cast<U>());
  out->requires_grad = v->requires_grad;
  return out;
}

template <typename U, typename T>
ConvLayer<U> cast_layer(const ConvLayer<T>& layer) {
  return ConvLayer<U>{layer.name, layer.spec, layer.transposed, cast_var<U>(layer.weight), cast_var<U>(layer.bias),
                      cast_var<U>(layer.slopes)};
}

}  // namespace nrsr
