#include <random>
#include <stdexcept>

#include "nrsr/gradcheck.hpp"
#include "nrsr/lfcr.hpp"
#include "nrsr/vdsr.hpp"

namespace nrsr {

namespace {

Tensor<double> random_tensor(const Shape& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(s);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Values bounded away from zero so that no PReLU input sits on the kink.
Tensor<double> off_kink_tensor(const Shape& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> t(s);
  for (auto& v : t.values()) v = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

Var<double> leaf(Tensor<double> t) { return parameter(std::move(t)); }

GradCheckResult conv_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  const int k = 1 + 2 * pick(rng);  // 1, 3 or 5
  const int stride = 1 + pick(rng) % 2;
  const ConvSpec spec{k, k, stride, stride, k / 2, 2, 3};
  auto x = leaf(random_tensor({2, 2, 7, 6}, rng));
  auto w = leaf(random_tensor({3, 2, k, k}, rng));
  auto b = leaf(random_tensor({1, 3, 1, 1}, rng));
  const Tensor<double> probe = random_tensor({2, 3, spec.conv_out_h(7), spec.conv_out_w(6)}, rng);
  return grad_check([&] { return weighted_sum(conv2d(x, w, b, spec), probe); },
                    {{"input", x}, {"weight", w}, {"bias", b}});
}

GradCheckResult deconv_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  const int variant = pick(rng);
  // Stride == kernel (block painting), overlapping stride 2, and stride 1.
  const ConvSpec spec = variant == 0 ? ConvSpec{4, 4, 4, 4, 0, 3, 2}
                        : variant == 1 ? ConvSpec{4, 4, 2, 2, 1, 3, 2}
                                       : ConvSpec{3, 3, 1, 1, 1, 3, 2};
  auto x = leaf(random_tensor({2, 3, 3, 4}, rng));
  auto w = leaf(random_tensor({3, 2, spec.kernel_h, spec.kernel_w}, rng));
  auto b = leaf(random_tensor({1, 2, 1, 1}, rng));
  const Tensor<double> probe = random_tensor({2, 2, spec.deconv_out_h(3), spec.deconv_out_w(4)}, rng);
  return grad_check([&] { return weighted_sum(deconv2d(x, w, b, spec), probe); },
                    {{"input", x}, {"weight", w}, {"bias", b}});
}

GradCheckResult prelu_case(std::mt19937_64& rng) {
  auto x = leaf(off_kink_tensor({2, 3, 4, 5}, rng));
  auto a = leaf(random_tensor({1, 3, 1, 1}, rng, 0.0, 0.5));
  const Tensor<double> probe = random_tensor({2, 3, 4, 5}, rng);
  return grad_check([&] { return weighted_sum(prelu(x, a), probe); }, {{"input", x}, {"slopes", a}});
}

GradCheckResult mse_case(std::mt19937_64& rng) {
  auto p = leaf(random_tensor({2, 2, 3, 4}, rng));
  auto t = leaf(random_tensor({2, 2, 3, 4}, rng));
  return grad_check([&] { return mse_loss(p, t); }, {{"pred", p}, {"target", t}});
}

GradCheckResult concat_case(std::mt19937_64& rng) {
  auto a = leaf(random_tensor({2, 2, 3, 3}, rng));
  auto b = leaf(random_tensor({2, 3, 3, 3}, rng));
  const Tensor<double> probe = random_tensor({2, 5, 3, 3}, rng);
  return grad_check([&] { return weighted_sum(concat_channels(a, b), probe); }, {{"a", a}, {"b", b}});
}

// A 1x1 convolution followed by the purely linear helpers.
GradCheckResult linear_case(std::mt19937_64& rng) {
  const ConvSpec spec{1, 1, 1, 1, 0, 4, 3};
  auto x = leaf(random_tensor({2, 4, 3, 3}, rng));
  auto w = leaf(random_tensor({3, 4, 1, 1}, rng));
  auto b = leaf(random_tensor({1, 3, 1, 1}, rng));
  const Tensor<double> factor = random_tensor({2, 3, 3, 3}, rng);
  const Tensor<double> probe = random_tensor({2, 2, 3, 3}, rng);
  return grad_check(
      [&] {
        auto y = conv2d(x, w, b, spec);
        auto z = add(scale(multiply(y, factor), 0.5), y);
        return weighted_sum(select_channels(z, {2, 0}), probe);
      },
      {{"input", x}, {"weight", w}, {"bias", b}});
}

SamplingMask random_mask(MaskKind kind, std::mt19937_64& rng) { return generate_mask(kind, rng()); }

GradCheckResult lfcr_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind_pick(0, 2);
  const int k = kind_pick(rng);
  const Sensor sensor = k == 0   ? Sensor::quarter(random_mask(MaskKind::quarter, rng))
                        : k == 1 ? Sensor::three_quarter(random_mask(MaskKind::three_quarter, rng))
                                 : Sensor::low_resolution();
  const auto net = LfcrNet<double>::build(sensor, rng());
  auto x = leaf(random_tensor({1, 1, 16, 16}, rng, 0.0, 255.0));
  const Tensor<double> probe = random_tensor({1, 1, 16, 16}, rng, -1.0 / 255.0, 1.0 / 255.0);
  std::vector<GradCheckInput> inputs{{"input", x}};
  for (const auto& p : net.parameters()) {
    if (p.trainable) inputs.push_back({p.name, p.var});
  }
  GradCheckOptions opt;
  opt.max_coords_per_input = 24;
  opt.seed = rng();
  return grad_check([&] { return weighted_sum(net.forward(x), probe); }, inputs, opt);
}

GradCheckResult vdsr_case(std::mt19937_64& rng, int depth, std::size_t coords) {
  const auto net = VdsrNet<double>::build(rng(), depth);
  auto x = leaf(random_tensor({1, 1, 12, 12}, rng, 0.0, 255.0));
  const Tensor<double> probe = random_tensor({1, 1, 12, 12}, rng, -1.0 / 255.0, 1.0 / 255.0);
  std::vector<GradCheckInput> inputs{{"input", x}};
  for (const auto& p : net.parameters()) inputs.push_back({p.name, p.var});
  GradCheckOptions opt;
  opt.max_coords_per_input = coords;
  opt.seed = rng();
  return grad_check([&] { return weighted_sum(net.forward(x).result, probe); }, inputs, opt);
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
  return {"conv2d", "deconv2d", "prelu", "mse", "concat", "linear", "lfcr", "vdsr4", "vdsr20"};
}

GradCheckResult run_gradcheck_case(const std::string& name, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (name == "conv2d") return conv_case(rng);
  if (name == "deconv2d") return deconv_case(rng);
  if (name == "prelu") return prelu_case(rng);
  if (name == "mse") return mse_case(rng);
  if (name == "concat") return concat_case(rng);
  if (name == "linear") return linear_case(rng);
  if (name == "lfcr") return lfcr_case(rng);
  if (name == "vdsr4") return vdsr_case(rng, 4, 48);
  if (name == "vdsr20") return vdsr_case(rng, 20, 4);
  throw std::invalid_argument("unknown gradcheck case '" + name + "'");
}

}  // namespace nrsr
