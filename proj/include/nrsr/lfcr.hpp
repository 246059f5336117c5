#pragma once

#include <array>
#include <cstdint>

#include "nrsr/layers.hpp"
#include "nrsr/sensor.hpp"

namespace nrsr {

/// Pixels per 8x8 target block that the sensor does not see directly.
inline constexpr int kMissingPerBlock = 3 * kTargetSize * kTargetSize / 4;
/// Hidden width: four times the number of missing pixels per block.
inline constexpr int kLfcrHiddenWidth = 4 * kMissingPerBlock;
inline constexpr int kLfcrFcLayers = 10;

/// Intermediate nodes of one LFCR forward pass.
template <typename T>
struct LfcrTrace {
  Var<T> vectorized;  // (N,64,H/8,W/8), normalized measurements
  Var<T> hidden;      // output of the last 1x1 layer
  Var<T> concatenated;
  Var<T> output;      // (N,1,H,W) on the 0..255 scale
};

/// Locally fully connected reconstruction: fixed vectorizing convolution,
/// ten 1x1 conv + PReLU layers (64 -> 192 -> ... -> 192), concatenation of
/// the 16 central measurements, and an 8x8 stride-8 deconvolution that
/// paints each target block.
template <typename T>
class LfcrNet {
 public:
  static LfcrNet build(const Sensor& sensor, std::uint64_t seed);

  /// Takes the HR reference (or a lifted measurement image); the sensor is
  /// simulated by the vectorizing layer. H and W must be multiples of 8.
  Var<T> forward(const Var<T>& reference) const { return trace(reference).output; }
  LfcrTrace<T> trace(const Var<T>& reference) const;
  /// Inference without recording a graph.
  Tensor<T> reconstruct(const Tensor<T>& reference) const {
    NoGradGuard guard;
    return forward(constant(reference))->value;
  }

  /// All blocks including the fixed vectorizing kernel (trainable = false).
  ParameterList<T> parameters() const;
  std::size_t param_count() const { return count_trainable(parameters()); }

  const Sensor& sensor() const { return sensor_; }
  const VectorizingKernel<T>& vectorizer() const { return vectorizer_; }
  const ConvLayer<T>& fc(int i) const { return fc_[i]; }
  const ConvLayer<T>& deconv() const { return deconv_; }
  int hidden_width() const { return kLfcrHiddenWidth; }

  /// Deep copy in another precision.
  template <typename U>
  LfcrNet<U> cast() const;

 private:
  template <typename U>
  friend class LfcrNet;

  explicit LfcrNet(Sensor sensor) : sensor_(std::move(sensor)) {}

  Sensor sensor_;
  VectorizingKernel<T> vectorizer_;
  Var<T> vec_weight_;
  std::array<ConvLayer<T>, kLfcrFcLayers> fc_;
  ConvLayer<T> deconv_;
};

extern template class LfcrNet<float>;
extern template class LfcrNet<double>;

}  // namespace nrsr
