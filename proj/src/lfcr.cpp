#include "nrsr/lfcr.hpp"

#include <cstdio>

namespace nrsr {

template <typename T>
LfcrNet<T> LfcrNet<T>::build(const Sensor& sensor, std::uint64_t seed) {
  LfcrNet net(sensor);
  net.vectorizer_ = build_vectorizing_kernel<T>(sensor);
  net.vec_weight_ = constant(net.vectorizer_.weights);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < kLfcrFcLayers; ++i) {
    const int in = i == 0 ? kMeasurementChannels : kLfcrHiddenWidth;
    char name[32];
    std::snprintf(name, sizeof(name), "lfcr/fc%02d", i);
    net.fc_[i] = make_conv_layer<T>(name, ConvSpec{1, 1, 1, 1, 0, in, kLfcrHiddenWidth}, false, true, rng);
  }
  const ConvSpec deconv{kTargetSize, kTargetSize, kTargetSize, kTargetSize, 0,
                        kLfcrHiddenWidth + kCentralChannels, 1};
  net.deconv_ = make_conv_layer<T>("lfcr/deconv", deconv, true, false, rng);
  return net;
}

template <typename T>
LfcrTrace<T> LfcrNet<T>::trace(const Var<T>& reference) const {
  const Shape s = reference->value.shape();
  if (s.c != 1 || s.h % kTargetSize != 0 || s.w % kTargetSize != 0) {
    throw ShapeError("lfcr: expected (N,1,H,W) with H, W multiples of 8, got " + s.str());
  }
  LfcrTrace<T> t;
  // The exact tap-mean path is used unless gradients must reach the input.
  Var<T> measurements = reference->requires_grad
                            ? conv2d(reference, vec_weight_, Var<T>{}, vectorizer_.spec)
                            : constant(vectorize(reference->value, vectorizer_));
  t.vectorized = normalize_pixels(measurements);
  Var<T> h = t.vectorized;
  for (const auto& layer : fc_) h = apply_layer(layer, h);
  t.hidden = h;
  const auto central = central_channel_indices();
  t.concatenated = concat_channels(h, select_channels(t.vectorized, std::vector<int>(central.begin(), central.end())));
  t.output = denormalize_pixels(apply_layer(deconv_, t.concatenated));
  return t;
}

template <typename T>
ParameterList<T> LfcrNet<T>::parameters() const {
  ParameterList<T> params;
  params.push_back({"lfcr/vec/weight", vec_weight_, false});
  for (const auto& layer : fc_) append_parameters(params, layer);
  append_parameters(params, deconv_);
  return params;
}

template <typename T>
template <typename U>
LfcrNet<U> LfcrNet<T>::cast() const {
  LfcrNet<U> out(sensor_);
  out.vectorizer_ = build_vectorizing_kernel<U>(sensor_);
  out.vec_weight_ = constant(out.vectorizer_.weights);
  for (int i = 0; i < kLfcrFcLayers; ++i) out.fc_[i] = cast_layer<U>(fc_[i]);
  out.deconv_ = cast_layer<U>(deconv_);
  return out;
}

template class LfcrNet<float>;
template class LfcrNet<double>;
template LfcrNet<double> LfcrNet<float>::cast<double>() const;
template LfcrNet<float> LfcrNet<double>::cast<float>() const;
template LfcrNet<float> LfcrNet<float>::cast<float>() const;

}  // namespace nrsr
