#pragma once

#include <cstdint>
#include <vector>

#include "nrsr/image.hpp"
#include "nrsr/layers.hpp"

namespace nrsr {

inline constexpr int kVdsrDepth = 20;
inline constexpr int kVdsrWidth = 64;

/// Residual enhancer: `depth` 3x3 convolutions (zero pad 1), PReLU after
/// all but the last. The network predicts r and the result is f + r.
template <typename T>
class VdsrNet {
 public:
  struct Output {
    Var<T> residual;  // r, 0..255 scale
    Var<T> result;    // f + r
  };

  static VdsrNet build(std::uint64_t seed, int depth = kVdsrDepth, int width = kVdsrWidth);

  Output forward(const Var<T>& estimate) const;
  /// Inference without recording a graph.
  Tensor<T> enhance(const Tensor<T>& estimate) const {
    NoGradGuard guard;
    return forward(constant(estimate)).result->value;
  }

  ParameterList<T> parameters() const;
  std::size_t param_count() const { return count_trainable(parameters()); }
  int depth() const { return static_cast<int>(layers_.size()); }
  const ConvLayer<T>& layer(int i) const { return layers_[i]; }

  /// 1 + 2 * depth for 3x3 kernels.
  int receptive_field() const { return 1 + 2 * depth(); }

  template <typename U>
  VdsrNet<U> cast() const;

 private:
  template <typename U>
  friend class VdsrNet;

  std::vector<ConvLayer<T>> layers_;
};

/// f + r * (1 - b): the residual is suppressed wherever b = 1. Throws
/// std::invalid_argument unless b is binary.
template <typename T>
Var<T> masked_residual_combine(const Var<T>& estimate, const Var<T>& residual, const Tensor<T>& mask);

Image masked_residual_combine(const Image& estimate, const Image& residual, const Image& mask);

extern template class VdsrNet<float>;
extern template class VdsrNet<double>;

}  // namespace nrsr
