#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nrsr/tensor.hpp"

namespace nrsr {

template <typename T>
struct Node;

/// Handle to a node of the computation graph. Graphs are built on the fly by
/// the op functions below and released with the last handle to their root.
template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
struct Node {
  Tensor<T> value;
  /// Allocated lazily by grad_buffer(); unallocated means zero.
  Tensor<T> grad;
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<Var<T>> inputs;
  /// Reads this->grad and accumulates into the inputs' grad buffers.
  std::function<void(Node&)> backward_fn;

  Tensor<T>& grad_buffer() {
    if (!grad.allocated()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <typename T>
Var<T> constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return node;
}

template <typename T>
Var<T> parameter(Tensor<T> value) {
  auto node = constant(std::move(value));
  node->requires_grad = true;
  return node;
}

/// Runs reverse-mode differentiation from a single-element root, seeding its
/// gradient with 1. Leaf gradients accumulate across calls.
template <typename T>
void backward(const Var<T>& root);

/// Geometry of a convolution or transposed convolution.
struct ConvSpec {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int pad = 0;
  int in_channels = 1;
  int out_channels = 1;
  bool trainable = true;

  void validate() const;
  int conv_out_h(int in_h) const { return (in_h + 2 * pad - kernel_h) / stride_h + 1; }
  int conv_out_w(int in_w) const { return (in_w + 2 * pad - kernel_w) / stride_w + 1; }
  int deconv_out_h(int in_h) const { return (in_h - 1) * stride_h - 2 * pad + kernel_h; }
  int deconv_out_w(int in_w) const { return (in_w - 1) * stride_w - 2 * pad + kernel_w; }
};

// Weight layout: (out_channels, in_channels, kernel_h, kernel_w). Bias has
// shape (1, out_channels, 1, 1) and may be null.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weights, const Var<T>& bias, const ConvSpec& spec);

// Transposed convolution, the adjoint of conv2d with the same geometry.
// Weight layout: (in_channels, out_channels, kernel_h, kernel_w). With
// stride == kernel and pad 0 every input position paints one disjoint
// kernel-sized output block.
template <typename T>
Var<T> deconv2d(const Var<T>& input, const Var<T>& weights, const Var<T>& bias, const ConvSpec& spec);

// Per-channel PReLU; slopes have shape (1, C, 1, 1).
template <typename T>
Var<T> prelu(const Var<T>& input, const Var<T>& slopes);

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> select_channels(const Var<T>& input, const std::vector<int>& channels);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& input, T factor);

/// input * factor + offset.
template <typename T>
Var<T> affine(const Var<T>& input, T factor, T offset);

/// Elementwise product with a constant tensor of the same shape.
template <typename T>
Var<T> multiply(const Var<T>& input, const Tensor<T>& factor);

/// Mean squared error over all elements, as a (1,1,1,1) tensor.
template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target);

/// Sum of input * weights, as a (1,1,1,1) tensor.
template <typename T>
Var<T> weighted_sum(const Var<T>& input, const Tensor<T>& weights);

/// Low-level kernels, shared with the non-graph inference paths.
namespace kernels {

template <typename T>
void im2col(const T* image, int channels, int height, int width, const ConvSpec& spec, int out_h,
            int out_w, T* cols);

template <typename T>
void col2im(const T* cols, int channels, int height, int width, const ConvSpec& spec, int out_h,
            int out_w, T* image);

}  // namespace kernels

/// Number of worker threads used for batch-parallel kernels. Defaults to the
/// NRSR_THREADS environment variable, else 1.
int thread_count();
void set_thread_count(int threads);

/// While alive, ops on this thread record no graph: results never require
/// grad and intermediate values are freed as soon as they are consumed.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

}  // namespace nrsr
