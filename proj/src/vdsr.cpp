#include "nrsr/vdsr.hpp"

#include <cstdio>
#include <stdexcept>

namespace nrsr {

template <typename T>
VdsrNet<T> VdsrNet<T>::build(std::uint64_t seed, int depth, int width) {
  if (depth < 2 || width < 1) throw std::invalid_argument("vdsr: depth must be >= 2 and width >= 1");
  VdsrNet net;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < depth; ++i) {
    const int in = i == 0 ? 1 : width;
    const int out = i == depth - 1 ? 1 : width;
    char name[32];
    std::snprintf(name, sizeof(name), "vdsr/conv%02d", i + 1);
    net.layers_.push_back(make_conv_layer<T>(name, ConvSpec{3, 3, 1, 1, 1, in, out}, false, i < depth - 1, rng));
  }
  return net;
}

template <typename T>
typename VdsrNet<T>::Output VdsrNet<T>::forward(const Var<T>& estimate) const {
  const Shape s = estimate->value.shape();
  if (s.c != 1) throw ShapeError("vdsr: expected single-channel input, got " + s.str());
  Var<T> h = normalize_pixels(estimate);
  for (const auto& layer : layers_) h = apply_layer(layer, h);
  Output out;
  out.residual = scale(h, static_cast<T>(kPixelScale));
  out.result = add(estimate, out.residual);
  return out;
}

template <typename T>
ParameterList<T> VdsrNet<T>::parameters() const {
  ParameterList<T> params;
  for (const auto& layer : layers_) append_parameters(params, layer);
  return params;
}

template <typename T>
template <typename U>
VdsrNet<U> VdsrNet<T>::cast() const {
  VdsrNet<U> out;
  for (const auto& layer : layers_) out.layers_.push_back(cast_layer<U>(layer));
  return out;
}

namespace {

template <typename T>
void require_binary(std::span<const T> values) {
  for (T v : values) {
    if (v != T{0} && v != T{1}) throw std::invalid_argument("masked_residual_combine: mask must be binary");
  }
}

}  // namespace

template <typename T>
Var<T> masked_residual_combine(const Var<T>& estimate, const Var<T>& residual, const Tensor<T>& mask) {
  require_same_shape(estimate->value.shape(), residual->value.shape(), "masked_residual_combine");
  require_same_shape(estimate->value.shape(), mask.shape(), "masked_residual_combine mask");
  require_binary(mask.values());
  Tensor<T> keep(mask.shape());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = T{1} - mask[i];
  return add(estimate, multiply(residual, keep));
}

Image masked_residual_combine(const Image& estimate, const Image& residual, const Image& mask) {
  auto out = masked_residual_combine(constant(to_tensor<float>(estimate)), constant(to_tensor<float>(residual)),
                                     to_tensor<float>(mask));
  return image_from_tensor(out->value);
}

template class VdsrNet<float>;
template class VdsrNet<double>;
template VdsrNet<double> VdsrNet<float>::cast<double>() const;
template VdsrNet<float> VdsrNet<double>::cast<float>() const;
template VdsrNet<float> VdsrNet<float>::cast<float>() const;
template Var<float> masked_residual_combine<float>(const Var<float>&, const Var<float>&, const Tensor<float>&);
template Var<double> masked_residual_combine<double>(const Var<double>&, const Var<double>&, const Tensor<double>&);

}  // namespace nrsr
