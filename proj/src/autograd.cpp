#include "nrsr/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdlib>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nrsr {

namespace {

template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatrixRM<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const MatrixRM<T>>;

int g_threads = 0;

int worker_index() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

// Keeps im2col scratch for one GEMM around a few million elements.
constexpr std::size_t kMaxColsElements = std::size_t{1} << 22;

thread_local bool g_grad_enabled = true;

template <typename T>
Var<T> make_node(Tensor<T> value, const char* op, std::vector<Var<T>> inputs) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  node->requires_grad =
      g_grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](const Var<T>& v) { return v && v->requires_grad; });
  if (node->requires_grad) node->inputs = std::move(inputs);
  return node;
}

template <typename T>
bool needs_grad(const Var<T>& v) {
  return v && v->requires_grad;
}

void check_bias(const Shape& bias, int channels, const char* what) {
  require_same_shape(bias, Shape{1, channels, 1, 1}, what);
}

template <typename T>
void add_bias(Tensor<T>& out, const Var<T>& bias) {
  if (!bias) return;
  const Shape& s = out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      T* p = out.plane(n, c);
      const T b = bias->value[c];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
  }
}

template <typename T>
void accumulate_bias_grad(const Tensor<T>& grad, const Var<T>& bias) {
  if (!needs_grad(bias)) return;
  const Shape& s = grad.shape();
  auto& db = bias->grad_buffer();
  for (int c = 0; c < s.c; ++c) {
    double acc = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = grad.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
    }
    db[c] += static_cast<T>(acc);
  }
}

template <typename T>
void sum_partials(std::vector<MatrixRM<T>>& partials, Tensor<T>& target) {
  MapRM<T> out(target.data(), partials.front().rows(), partials.front().cols());
  for (const auto& p : partials) out += p;
}

bool is_pointwise(const ConvSpec& s) {
  return s.kernel_h == 1 && s.kernel_w == 1 && s.stride_h == 1 && s.stride_w == 1 && s.pad == 0;
}

// im2col over output rows [row_begin, row_end).
template <typename T>
void im2col_rows(const T* image, int channels, int height, int width, const ConvSpec& spec, int out_w,
                 int row_begin, int row_end, T* cols) {
  const std::size_t span = static_cast<std::size_t>(row_end - row_begin) * out_w;
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    const T* plane = image + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < spec.kernel_h; ++ky) {
      for (int kx = 0; kx < spec.kernel_w; ++kx, ++row) {
        T* dst = cols + row * span;
        for (int oy = row_begin; oy < row_end; ++oy) {
          const int iy = oy * spec.stride_h - spec.pad + ky;
          T* d = dst + static_cast<std::size_t>(oy - row_begin) * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(d, d + out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * spec.stride_w - spec.pad + kx;
            d[ox] = (ix >= 0 && ix < width) ? src[ix] : T{0};
          }
        }
      }
    }
  }
}

}  // namespace

int thread_count() {
  if (g_threads > 0) return g_threads;
  if (const char* env = std::getenv("NRSR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void set_thread_count(int threads) { g_threads = std::max(0, threads); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void ConvSpec::validate() const {
  if (kernel_h < 1 || kernel_w < 1 || stride_h < 1 || stride_w < 1) {
    throw ShapeError("conv spec: kernel and stride must be >= 1");
  }
  if (pad < 0) throw ShapeError("conv spec: pad must be >= 0");
  if (in_channels < 1 || out_channels < 1) throw ShapeError("conv spec: channel counts must be >= 1");
}

namespace kernels {

template <typename T>
void im2col(const T* image, int channels, int height, int width, const ConvSpec& spec, int out_h,
            int out_w, T* cols) {
  im2col_rows(image, channels, height, width, spec, out_w, 0, out_h, cols);
}

template <typename T>
void col2im(const T* cols, int channels, int height, int width, const ConvSpec& spec, int out_h,
            int out_w, T* image) {
  const std::size_t span = static_cast<std::size_t>(out_h) * out_w;
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    T* plane = image + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < spec.kernel_h; ++ky) {
      for (int kx = 0; kx < spec.kernel_w; ++kx, ++row) {
        const T* src = cols + row * span;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * spec.stride_h - spec.pad + ky;
          if (iy < 0 || iy >= height) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * width;
          const T* s = src + static_cast<std::size_t>(oy) * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * spec.stride_w - spec.pad + kx;
            if (ix >= 0 && ix < width) dst[ix] += s[ox];
          }
        }
      }
    }
  }
}

template void im2col<float>(const float*, int, int, int, const ConvSpec&, int, int, float*);
template void im2col<double>(const double*, int, int, int, const ConvSpec&, int, int, double*);
template void col2im<float>(const float*, int, int, int, const ConvSpec&, int, int, float*);
template void col2im<double>(const double*, int, int, int, const ConvSpec&, int, int, double*);

}  // namespace kernels

template <typename T>
void backward(const Var<T>& root) {
  if (!root || root->value.size() != 1) throw ShapeError("backward: root must hold a single element");
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child && child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  root->grad_buffer()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn && node->grad.allocated()) node->backward_fn(*node);
  }
}

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weights, const Var<T>& bias, const ConvSpec& spec) {
  spec.validate();
  const Shape in = input->value.shape();
  if (in.c != spec.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(in.c) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  }
  require_same_shape(weights->value.shape(),
                     Shape{spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w},
                     "conv2d weights");
  if (bias) check_bias(bias->value.shape(), spec.out_channels, "conv2d bias");
  const int oh = spec.conv_out_h(in.h);
  const int ow = spec.conv_out_w(in.w);
  if (in.h + 2 * spec.pad < spec.kernel_h || in.w + 2 * spec.pad < spec.kernel_w || oh < 1 || ow < 1) {
    throw ShapeError("conv2d: input " + in.str() + " smaller than kernel");
  }

  const int out_c = spec.out_channels;
  const int k = spec.in_channels * spec.kernel_h * spec.kernel_w;
  const bool pointwise = is_pointwise(spec);
  Tensor<T> out(Shape{in.n, out_c, oh, ow});
  ConstMapRM<T> w(weights->value.data(), out_c, k);

  // Band the output rows so the im2col buffer stays bounded on large images.
  const std::size_t row_cols = static_cast<std::size_t>(k) * ow;
  const int band = std::max(1, static_cast<int>(std::min<std::size_t>(oh, kMaxColsElements / row_cols)));

#pragma omp parallel for num_threads(thread_count()) schedule(static)
  for (int n = 0; n < in.n; ++n) {
    MapRM<T> y(out.plane(n, 0), out_c, static_cast<Eigen::Index>(oh) * ow);
    if (pointwise) {
      ConstMapRM<T> x(input->value.plane(n, 0), k, static_cast<Eigen::Index>(oh) * ow);
      y.noalias() = w * x;
      continue;
    }
    std::vector<T> cols(row_cols * band);
    for (int r0 = 0; r0 < oh; r0 += band) {
      const int r1 = std::min(oh, r0 + band);
      const Eigen::Index span = static_cast<Eigen::Index>(r1 - r0) * ow;
      im2col_rows(input->value.plane(n, 0), in.c, in.h, in.w, spec, ow, r0, r1, cols.data());
      ConstMapRM<T> c(cols.data(), k, span);
      y.middleCols(static_cast<Eigen::Index>(r0) * ow, span).noalias() = w * c;
    }
  }
  add_bias(out, bias);

  auto node = make_node(std::move(out), "conv2d", {input, weights, bias});
  if (!node->requires_grad) return node;
  node->backward_fn = [spec, pointwise, k, oh, ow](Node<T>& self) {
    const auto& x = self.inputs[0];
    const auto& wv = self.inputs[1];
    const auto& b = self.inputs[2];
    const Tensor<T>& g = self.grad;
    const Shape in = x->value.shape();
    const int out_c = spec.out_channels;
    const Eigen::Index p = static_cast<Eigen::Index>(oh) * ow;
    const bool need_dx = x->requires_grad;
    const bool need_dw = wv->requires_grad;
    if (need_dx) x->grad_buffer();
    const int threads = std::max(1, std::min(thread_count(), in.n));
    std::vector<MatrixRM<T>> dw_parts;
    if (need_dw) dw_parts.assign(threads, MatrixRM<T>::Zero(out_c, k));
    ConstMapRM<T> w(wv->value.data(), out_c, k);

#pragma omp parallel for num_threads(threads) schedule(static)
    for (int n = 0; n < in.n; ++n) {
      ConstMapRM<T> gy(g.plane(n, 0), out_c, p);
      std::vector<T> cols;
      if (pointwise) {
        ConstMapRM<T> xc(x->value.plane(n, 0), k, p);
        if (need_dw) dw_parts[worker_index()].noalias() += gy * xc.transpose();
        if (need_dx) {
          MapRM<T> dx(x->grad.plane(n, 0), k, p);
          dx.noalias() += w.transpose() * gy;
        }
        continue;
      }
      if (need_dw) {
        cols.resize(static_cast<std::size_t>(k) * p);
        kernels::im2col(x->value.plane(n, 0), in.c, in.h, in.w, spec, oh, ow, cols.data());
        ConstMapRM<T> xc(cols.data(), k, p);
        dw_parts[worker_index()].noalias() += gy * xc.transpose();
      }
      if (need_dx) {
        MatrixRM<T> dcols = w.transpose() * gy;
        kernels::col2im(dcols.data(), in.c, in.h, in.w, spec, oh, ow, x->grad.plane(n, 0));
      }
    }
    if (need_dw) sum_partials(dw_parts, wv->grad_buffer());
    accumulate_bias_grad(g, b);
  };
  return node;
}

template <typename T>
Var<T> deconv2d(const Var<T>& input, const Var<T>& weights, const Var<T>& bias, const ConvSpec& spec) {
  spec.validate();
  const Shape in = input->value.shape();
  if (in.c != spec.in_channels) {
    throw ShapeError("deconv2d: input has " + std::to_string(in.c) + " channels, spec expects " +
                     std::to_string(spec.in_channels));
  }
  require_same_shape(weights->value.shape(),
                     Shape{spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w},
                     "deconv2d weights");
  if (bias) check_bias(bias->value.shape(), spec.out_channels, "deconv2d bias");
  if (spec.stride_h > spec.kernel_h || spec.stride_w > spec.kernel_w) {
    throw UnsupportedError("deconv2d: stride larger than kernel leaves output gaps");
  }
  const int oh = spec.deconv_out_h(in.h);
  const int ow = spec.deconv_out_w(in.w);
  if (oh < 1 || ow < 1) throw ShapeError("deconv2d: padding leaves an empty output");

  const int out_c = spec.out_channels;
  const int kcols = out_c * spec.kernel_h * spec.kernel_w;
  const Eigen::Index p = static_cast<Eigen::Index>(in.h) * in.w;
  Tensor<T> out(Shape{in.n, out_c, oh, ow});
  ConstMapRM<T> w(weights->value.data(), spec.in_channels, kcols);

#pragma omp parallel for num_threads(thread_count()) schedule(static)
  for (int n = 0; n < in.n; ++n) {
    ConstMapRM<T> x(input->value.plane(n, 0), spec.in_channels, p);
    MatrixRM<T> cols = w.transpose() * x;
    kernels::col2im(cols.data(), out_c, oh, ow, spec, in.h, in.w, out.plane(n, 0));
  }
  add_bias(out, bias);

  auto node = make_node(std::move(out), "deconv2d", {input, weights, bias});
  if (!node->requires_grad) return node;
  node->backward_fn = [spec, kcols, oh, ow](Node<T>& self) {
    const auto& x = self.inputs[0];
    const auto& wv = self.inputs[1];
    const Tensor<T>& g = self.grad;
    const Shape in = x->value.shape();
    const Eigen::Index p = static_cast<Eigen::Index>(in.h) * in.w;
    const bool need_dx = x->requires_grad;
    const bool need_dw = wv->requires_grad;
    if (need_dx) x->grad_buffer();
    const int threads = std::max(1, std::min(thread_count(), in.n));
    std::vector<MatrixRM<T>> dw_parts;
    if (need_dw) dw_parts.assign(threads, MatrixRM<T>::Zero(spec.in_channels, kcols));
    ConstMapRM<T> w(wv->value.data(), spec.in_channels, kcols);

#pragma omp parallel for num_threads(threads) schedule(static)
    for (int n = 0; n < in.n; ++n) {
      std::vector<T> cols(static_cast<std::size_t>(kcols) * p);
      kernels::im2col(g.plane(n, 0), spec.out_channels, oh, ow, spec, in.h, in.w, cols.data());
      ConstMapRM<T> gc(cols.data(), kcols, p);
      if (need_dw) {
        ConstMapRM<T> xv(x->value.plane(n, 0), spec.in_channels, p);
        dw_parts[worker_index()].noalias() += xv * gc.transpose();
      }
      if (need_dx) {
        MapRM<T> dx(x->grad.plane(n, 0), spec.in_channels, p);
        dx.noalias() += w * gc;
      }
    }
    if (need_dw) sum_partials(dw_parts, wv->grad_buffer());
    accumulate_bias_grad(g, self.inputs[2]);
  };
  return node;
}

template <typename T>
Var<T> prelu(const Var<T>& input, const Var<T>& slopes) {
  const Shape s = input->value.shape();
  require_same_shape(slopes->value.shape(), Shape{1, s.c, 1, 1}, "prelu slopes");
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T a = slopes->value[c];
      const T* x = input->value.plane(n, c);
      T* y = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) y[i] = x[i] >= T{0} ? x[i] : a * x[i];
    }
  }
  auto node = make_node(std::move(out), "prelu", {input, slopes});
  if (!node->requires_grad) return node;
  node->backward_fn = [](Node<T>& self) {
    const auto& in = self.inputs[0];
    const auto& sl = self.inputs[1];
    const Shape s = in->value.shape();
    const Tensor<T>& g = self.grad;
    Tensor<T>* dx = in->requires_grad ? &in->grad_buffer() : nullptr;
    Tensor<T>* da = sl->requires_grad ? &sl->grad_buffer() : nullptr;
    for (int c = 0; c < s.c; ++c) {
      const T a = sl->value[c];
      double slope_acc = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const T* x = in->value.plane(n, c);
        const T* gy = g.plane(n, c);
        T* gx = dx ? dx->plane(n, c) : nullptr;
        for (std::size_t i = 0; i < s.plane(); ++i) {
          if (x[i] >= T{0}) {
            if (gx) gx[i] += gy[i];
          } else {
            if (gx) gx[i] += a * gy[i];
            slope_acc += static_cast<double>(x[i]) * gy[i];
          }
        }
      }
      if (da) (*da)[c] += static_cast<T>(slope_acc);
    }
  };
  return node;
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape sa = a->value.shape();
  const Shape sb = b->value.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError("concat_channels: batch/spatial mismatch " + sa.str() + " vs " + sb.str());
  }
  Tensor<T> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t na = sa.c * sa.plane();
  const std::size_t nb = sb.c * sb.plane();
  for (int n = 0; n < sa.n; ++n) {
    T* dst = out.plane(n, 0);
    std::copy_n(a->value.data() + n * na, na, dst);
    std::copy_n(b->value.data() + n * nb, nb, dst + na);
  }
  auto node = make_node(std::move(out), "concat", {a, b});
  if (!node->requires_grad) return node;
  node->backward_fn = [na, nb](Node<T>& self) {
    const Tensor<T>& g = self.grad;
    const int batch = g.shape().n;
    for (int part = 0; part < 2; ++part) {
      const auto& v = self.inputs[part];
      if (!v->requires_grad) continue;
      const std::size_t len = part == 0 ? na : nb;
      const std::size_t offset = part == 0 ? 0 : na;
      T* dst = v->grad_buffer().data();
      for (int n = 0; n < batch; ++n) {
        const T* src = g.data() + n * (na + nb) + offset;
        for (std::size_t i = 0; i < len; ++i) dst[n * len + i] += src[i];
      }
    }
  };
  return node;
}

template <typename T>
Var<T> select_channels(const Var<T>& input, const std::vector<int>& channels) {
  const Shape s = input->value.shape();
  for (int c : channels) {
    if (c < 0 || c >= s.c) throw ShapeError("select_channels: channel " + std::to_string(c) + " out of range");
  }
  Tensor<T> out(Shape{s.n, static_cast<int>(channels.size()), s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < channels.size(); ++i) {
      std::copy_n(input->value.plane(n, channels[i]), s.plane(), out.plane(n, static_cast<int>(i)));
    }
  }
  auto node = make_node(std::move(out), "select", {input});
  if (!node->requires_grad) return node;
  node->backward_fn = [channels](Node<T>& self) {
    auto& dx = self.inputs[0]->grad_buffer();
    const Shape s = dx.shape();
    for (int n = 0; n < s.n; ++n) {
      for (std::size_t i = 0; i < channels.size(); ++i) {
        const T* g = self.grad.plane(n, static_cast<int>(i));
        T* d = dx.plane(n, channels[i]);
        for (std::size_t k = 0; k < s.plane(); ++k) d[k] += g[k];
      }
    }
  };
  return node;
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value.shape(), b->value.shape(), "add");
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  auto node = make_node(std::move(out), "add", {a, b});
  if (!node->requires_grad) return node;
  node->backward_fn = [](Node<T>& self) {
    for (const auto& v : self.inputs) {
      if (!v->requires_grad) continue;
      auto& d = v->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  };
  return node;
}

template <typename T>
Var<T> scale(const Var<T>& input, T factor) {
  return affine(input, factor, T{0});
}

template <typename T>
Var<T> affine(const Var<T>& input, T factor, T offset) {
  Tensor<T> out(input->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = input->value[i] * factor + offset;
  auto node = make_node(std::move(out), "affine", {input});
  if (!node->requires_grad) return node;
  node->backward_fn = [factor](Node<T>& self) {
    auto& d = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * factor;
  };
  return node;
}

template <typename T>
Var<T> multiply(const Var<T>& input, const Tensor<T>& factor) {
  require_same_shape(input->value.shape(), factor.shape(), "multiply");
  Tensor<T> out(input->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = input->value[i] * factor[i];
  auto node = make_node(std::move(out), "multiply", {input});
  if (!node->requires_grad) return node;
  node->backward_fn = [factor](Node<T>& self) {
    auto& d = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * factor[i];
  };
  return node;
}

template <typename T>
Var<T> mse_loss(const Var<T>& pred, const Var<T>& target) {
  require_same_shape(pred->value.shape(), target->value.shape(), "mse_loss");
  const std::size_t count = pred->value.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(pred->value[i]) - static_cast<double>(target->value[i]);
    acc += d * d;
  }
  Tensor<T> out(Shape{1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(count)));
  auto node = make_node(std::move(out), "mse", {pred, target});
  if (!node->requires_grad) return node;
  node->backward_fn = [count](Node<T>& self) {
    const T coeff = static_cast<T>(2.0 / static_cast<double>(count)) * self.grad[0];
    const auto& p = self.inputs[0];
    const auto& t = self.inputs[1];
    if (p->requires_grad) {
      auto& d = p->grad_buffer();
      for (std::size_t i = 0; i < count; ++i) d[i] += coeff * (p->value[i] - t->value[i]);
    }
    if (t->requires_grad) {
      auto& d = t->grad_buffer();
      for (std::size_t i = 0; i < count; ++i) d[i] -= coeff * (p->value[i] - t->value[i]);
    }
  };
  return node;
}

template <typename T>
Var<T> weighted_sum(const Var<T>& input, const Tensor<T>& weights) {
  require_same_shape(input->value.shape(), weights.shape(), "weighted_sum");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += static_cast<double>(input->value[i]) * static_cast<double>(weights[i]);
  }
  auto node = make_node(Tensor<T>(Shape{1, 1, 1, 1}, static_cast<T>(acc)), "weighted_sum", {input});
  if (!node->requires_grad) return node;
  node->backward_fn = [weights](Node<T>& self) {
    auto& d = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[0] * weights[i];
  };
  return node;
}

#define NRSR_INSTANTIATE_OPS(T)                                                             \
  template void backward<T>(const Var<T>&);                                                \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, const ConvSpec&); \
  template Var<T> deconv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, const ConvSpec&); \
  template Var<T> prelu<T>(const Var<T>&, const Var<T>&);                                  \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                        \
  template Var<T> select_channels<T>(const Var<T>&, const std::vector<int>&);              \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                    \
  template Var<T> scale<T>(const Var<T>&, T);                                              \
  template Var<T> affine<T>(const Var<T>&, T, T);                                          \
  template Var<T> multiply<T>(const Var<T>&, const Tensor<T>&);                            \
  template Var<T> mse_loss<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);

NRSR_INSTANTIATE_OPS(float)
NRSR_INSTANTIATE_OPS(double)

#undef NRSR_INSTANTIATE_OPS

}  // namespace nrsr
