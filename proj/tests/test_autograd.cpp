#include <cmath>
#include <random>

#include "doctest.h"
#include "nrsr/gradcheck.hpp"
#include "nrsr/optim.hpp"
#include "oracles.hpp"

using namespace nrsr;

namespace {

Tensor<double> random_tensor(const Shape& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<double> t(s);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(validate_shape({0, 1, 1, 1}), ShapeError);
  CHECK_THROWS_AS(validate_shape({1, 1, 0, 1}), ShapeError);
  CHECK_NOTHROW(validate_shape({1, 0, 2, 2}));
  Tensor<float> t(Shape{2, 3, 4, 5});
  CHECK(t.size() == 120);
  CHECK(t.index(1, 2, 3, 4) == 119);
}

TEST_CASE("conv2d identity and sum of ones") {
  Tensor<double> in(Shape{1, 1, 3, 3});
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<double>(i) * 1.25 - 3.0;
  auto out = conv2d(constant(in), constant(Tensor<double>(Shape{1, 1, 1, 1}, 1.0)), Var<double>{},
                    ConvSpec{1, 1, 1, 1, 0, 1, 1});
  CHECK(out->value.values().size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out->value[i] == in[i]);

  auto sum = conv2d(constant(Tensor<double>(Shape{1, 1, 2, 2}, 1.0)), constant(Tensor<double>(Shape{1, 1, 2, 2}, 1.0)),
                    Var<double>{}, ConvSpec{2, 2, 2, 2, 0, 1, 1});
  REQUIRE(sum->value.shape() == Shape{1, 1, 1, 1});
  CHECK(sum->value[0] == 4.0);
}

TEST_CASE("conv2d with centred identity kernel is the identity") {
  std::mt19937_64 rng(3);
  for (int k : {3, 5}) {
    const Tensor<double> in = random_tensor({2, 1, 7, 6}, rng);
    Tensor<double> w(Shape{1, 1, k, k});
    w.at(0, 0, k / 2, k / 2) = 1.0;
    auto out = conv2d(constant(in), constant(w), Var<double>{}, ConvSpec{k, k, 1, 1, (k - 1) / 2, 1, 1});
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out->value[i] == in[i]);
  }
}

TEST_CASE("conv2d matches the direct-loop oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 1 + trial % 4;
    const int stride = 1 + trial % 3;
    const int pad = trial % 3;
    const int cin = 1 + trial % 3;
    const int cout = 2 + trial % 2;
    const Tensor<double> in = random_tensor({2, cin, 9, 8}, rng);
    const Tensor<double> w = random_tensor({cout, cin, k, k}, rng);
    const Tensor<double> b = random_tensor({1, cout, 1, 1}, rng);
    const ConvSpec spec{k, k, stride, stride, pad, cin, cout};
    auto out = conv2d(constant(in), constant(w), constant(b), spec);
    CHECK(max_abs_diff(out->value, test::conv2d_oracle(in, w, &b, stride, pad)) < 1e-12);
  }
}

TEST_CASE("conv2d rejects mismatched shapes") {
  Tensor<double> in(Shape{1, 2, 4, 4});
  Tensor<double> w(Shape{3, 1, 3, 3});
  CHECK_THROWS_AS(conv2d(constant(in), constant(w), Var<double>{}, ConvSpec{3, 3, 1, 1, 1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(conv2d(constant(in), constant(Tensor<double>(Shape{3, 2, 5, 5})), Var<double>{},
                         ConvSpec{5, 5, 1, 1, 0, 2, 3}),
                  ShapeError);
}

TEST_CASE("deconv2d broadcast and disjoint blocks") {
  const ConvSpec spec{8, 8, 8, 8, 0, 1, 1};
  auto one = deconv2d(constant(Tensor<double>(Shape{1, 1, 1, 1}, 3.5)), constant(Tensor<double>(Shape{1, 1, 8, 8}, 1.0)),
                      Var<double>{}, spec);
  REQUIRE(one->value.shape() == Shape{1, 1, 8, 8});
  for (double v : one->value.values()) CHECK(v == 3.5);

  std::mt19937_64 rng(5);
  Tensor<double> in = random_tensor({1, 1, 2, 2}, rng);
  const Tensor<double> w = random_tensor({1, 1, 8, 8}, rng);
  auto full = deconv2d(constant(in), constant(w), Var<double>{}, spec);
  REQUIRE(full->value.shape() == Shape{1, 1, 16, 16});
  // Zeroing one input position zeroes exactly its 8x8 block.
  in.at(0, 0, 1, 0) = 0.0;
  auto cut = deconv2d(constant(in), constant(w), Var<double>{}, spec);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const bool in_block = y >= 8 && x < 8;
      if (in_block) CHECK(cut->value.at(0, 0, y, x) == 0.0);
      else CHECK(cut->value.at(0, 0, y, x) == full->value.at(0, 0, y, x));
    }
  }
}

TEST_CASE("deconv2d matches the scatter oracle, general strides") {
  std::mt19937_64 rng(17);
  const ConvSpec specs[] = {{8, 8, 8, 8, 0, 3, 1}, {4, 4, 2, 2, 1, 2, 3}, {3, 3, 1, 1, 1, 2, 2}, {3, 3, 2, 2, 0, 1, 2}};
  for (const auto& spec : specs) {
    const Tensor<double> in = random_tensor({2, spec.in_channels, 3, 4}, rng);
    const Tensor<double> w = random_tensor({spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w}, rng);
    const Tensor<double> b = random_tensor({1, spec.out_channels, 1, 1}, rng);
    auto out = deconv2d(constant(in), constant(w), constant(b), spec);
    CHECK(max_abs_diff(out->value, test::deconv2d_oracle(in, w, &b, spec.stride_h, spec.pad)) < 1e-12);
  }
}

TEST_CASE("deconv2d rejects strides that leave gaps") {
  CHECK_THROWS_AS(deconv2d(constant(Tensor<double>(Shape{1, 1, 2, 2})), constant(Tensor<double>(Shape{1, 1, 2, 2})),
                           Var<double>{}, ConvSpec{2, 2, 3, 3, 0, 1, 1}),
                  UnsupportedError);
}

TEST_CASE("prelu definition and slope gradient") {
  auto x = parameter(Tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{2.0, -2.0}));
  auto a = parameter(Tensor<double>(Shape{1, 1, 1, 1}, 0.25));
  auto y = prelu(x, a);
  CHECK(y->value[0] == 2.0);
  CHECK(y->value[1] == -0.5);
  backward(weighted_sum(y, Tensor<double>(Shape{1, 1, 1, 2}, std::vector<double>{0.0, 1.0})));
  CHECK(a->grad[0] == doctest::Approx(-2.0));
  CHECK(x->grad[1] == doctest::Approx(0.25));
}

TEST_CASE("concat_channels layout, zero channels and gradient routing") {
  std::mt19937_64 rng(2);
  auto a = parameter(random_tensor({1, 192, 4, 4}, rng));
  auto b = parameter(random_tensor({1, 16, 4, 4}, rng));
  auto c = concat_channels(a, b);
  CHECK(c->value.shape() == Shape{1, 208, 4, 4});
  CHECK(c->value.at(0, 5, 1, 2) == a->value.at(0, 5, 1, 2));
  CHECK(c->value.at(0, 195, 3, 0) == b->value.at(0, 3, 3, 0));

  auto empty = constant(Tensor<double>(Shape{1, 0, 4, 4}));
  auto same = concat_channels(b, empty);
  for (std::size_t i = 0; i < b->value.size(); ++i) CHECK(same->value[i] == b->value[i]);

  CHECK_THROWS_AS(concat_channels(a, constant(Tensor<double>(Shape{1, 16, 4, 5}))), ShapeError);

  // Slicing back out after concat routes gradients exactly.
  const Tensor<double> probe = random_tensor({1, 16, 4, 4}, rng);
  std::vector<int> tail(16);
  for (int i = 0; i < 16; ++i) tail[i] = 192 + i;
  backward(weighted_sum(select_channels(c, tail), probe));
  for (std::size_t i = 0; i < probe.size(); ++i) CHECK(b->grad[i] == probe[i]);
  for (double g : a->grad.values()) CHECK(g == 0.0);
}

TEST_CASE("mse_loss values and gradient") {
  auto p = parameter(Tensor<double>(Shape{1, 1, 2, 3}, 2.0));
  auto t = constant(Tensor<double>(Shape{1, 1, 2, 3}, 0.0));
  auto l = mse_loss(p, t);
  CHECK(l->value[0] == 4.0);
  backward(l);
  for (double g : p->grad.values()) CHECK(g == doctest::Approx(2.0 * 2.0 / 6.0));
  CHECK(mse_loss(p, p)->value[0] == 0.0);
  CHECK_THROWS_AS(mse_loss(p, constant(Tensor<double>(Shape{1, 1, 3, 2}))), ShapeError);
}

TEST_CASE("mse_loss is non-negative and zero only for equal tensors") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const Tensor<double> a = random_tensor({1, 2, 3, 3}, rng);
    Tensor<double> b = a;
    CHECK(mse_loss(constant(a), constant(b))->value[0] == 0.0);
    b[static_cast<std::size_t>(i) % b.size()] += 1e-3;
    CHECK(mse_loss(constant(a), constant(b))->value[0] > 0.0);
  }
}

TEST_CASE("backward accumulates through shared subgraphs") {
  auto x = parameter(Tensor<double>(Shape{1, 1, 1, 1}, 3.0));
  auto y = add(x, x);
  auto z = add(y, scale(x, 2.0));
  backward(z);
  CHECK(x->grad[0] == 4.0);
}

TEST_CASE("no-grad guard records nothing") {
  auto w = parameter(Tensor<double>(Shape{1, 1, 1, 1}, 2.0));
  {
    NoGradGuard guard;
    auto y = scale(w, 3.0);
    CHECK_FALSE(y->requires_grad);
    CHECK(y->inputs.empty());
  }
  CHECK(scale(w, 3.0)->requires_grad);
}

TEST_CASE("grad_check passes for every op over 20 seeds") {
  for (const char* name : {"conv2d", "deconv2d", "prelu", "mse", "concat", "linear"}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const GradCheckResult r = run_gradcheck_case(name, seed);
      INFO(name << " seed " << seed << " worst " << r.worst);
      CHECK(r.checked > 0);
      CHECK(r.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("grad_check tight cases") {
  GradCheckResult linear = run_gradcheck_case("linear", 4);
  CHECK(linear.max_rel_error <= 1e-7);
  GradCheckResult pr = run_gradcheck_case("prelu", 4);
  CHECK(pr.skipped_kinks == 0);
  CHECK(pr.max_rel_error <= 1e-6);
}

TEST_CASE("grad_check detects a wrong gradient") {
  // A hand-built node whose backward is off by a factor of two.
  auto x = parameter(Tensor<double>(Shape{1, 1, 1, 1}, 0.7));
  auto bad = [&] {
    auto node = std::make_shared<Node<double>>();
    node->value = Tensor<double>(Shape{1, 1, 1, 1}, x->value[0] * x->value[0]);
    node->requires_grad = true;
    node->inputs = {x};
    node->backward_fn = [](Node<double>& self) {
      self.inputs[0]->grad_buffer()[0] += self.grad[0] * 4.0 * self.inputs[0]->value[0];
    };
    return node;
  };
  CHECK(grad_check(bad, {{"x", x}}).max_rel_error > 0.4);
}

TEST_CASE("adam: zero gradient, first step and scalar rollout") {
  Adam<double> adam;
  auto p = parameter(Tensor<double>(Shape{1, 1, 1, 1}, 1.5));
  ParameterList<double> params{{"p", p, true}};
  p->grad = Tensor<double>(Shape{1, 1, 1, 1}, 0.0);
  adam.step(params, 1e-3);
  CHECK(p->value[0] == 1.5);
  CHECK(adam.steps() == 1);

  Adam<double> fresh;
  p->value[0] = 0.0;
  p->grad = Tensor<double>(Shape{1, 1, 1, 1}, 1.0);
  fresh.step(params, 1e-4);
  CHECK(std::abs(p->value[0]) == doctest::Approx(1e-4).epsilon(1e-3));

  Adam<double> roll;
  p->value[0] = 1.0;
  double prev = 1.0;
  for (int i = 0; i < 10; ++i) {
    p->grad = Tensor<double>(Shape{1, 1, 1, 1}, 2.0 * p->value[0]);
    roll.step(params, 0.1);
    CHECK(std::abs(p->value[0]) < prev);
    prev = std::abs(p->value[0]);
  }
}

TEST_CASE("adam update opposes the bias-corrected first moment") {
  std::mt19937_64 rng(21);
  Adam<double> adam;
  auto p = parameter(random_tensor({1, 4, 3, 3}, rng));
  ParameterList<double> params{{"p", p, true}};
  for (int step = 0; step < 5; ++step) {
    const Tensor<double> before = p->value;
    p->grad = random_tensor(p->value.shape(), rng);
    adam.step(params, 1e-2);
    const auto& m = adam.moments().at("p").first;
    for (std::size_t i = 0; i < before.size(); ++i) {
      const double update = p->value[i] - before[i];
      if (m[i] != 0.0) CHECK((update < 0) == (m[i] > 0));
    }
  }
}

TEST_CASE("adam rejects non-finite gradients before updating") {
  Adam<float> adam;
  auto a = parameter(Tensor<float>(Shape{1, 1, 1, 1}, 1.0f));
  auto b = parameter(Tensor<float>(Shape{1, 1, 1, 1}, 1.0f));
  ParameterList<float> params{{"layer/a", a, true}, {"layer/b", b, true}};
  a->grad = Tensor<float>(Shape{1, 1, 1, 1}, 1.0f);
  b->grad = Tensor<float>(Shape{1, 1, 1, 1}, NAN);
  try {
    adam.step(params, 0.1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("layer/b") != std::string::npos);
  }
  CHECK(a->value[0] == 1.0f);
  CHECK(adam.steps() == 0);
}

TEST_CASE("parallel conv2d stays within reduction-order tolerance") {
  std::mt19937_64 rng(8);
  Tensor<float> in(Shape{4, 8, 12, 12});
  Tensor<float> w(Shape{8, 8, 3, 3});
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : in.values()) v = u(rng);
  for (auto& v : w.values()) v = u(rng);
  const ConvSpec spec{3, 3, 1, 1, 1, 8, 8};
  auto run = [&](int threads) {
    set_thread_count(threads);
    auto x = parameter(in);
    auto wv = parameter(w);
    auto y = conv2d(x, wv, Var<float>{}, spec);
    backward(mse_loss(y, constant(Tensor<float>(y->value.shape()))));
    return std::make_pair(y->value, wv->grad);
  };
  const auto one = run(1);
  const auto four = run(4);
  set_thread_count(0);
  for (std::size_t i = 0; i < one.first.size(); ++i) CHECK(one.first[i] == four.first[i]);
  for (std::size_t i = 0; i < one.second.size(); ++i) {
    CHECK(std::abs(one.second[i] - four.second[i]) <= 1e-5f * std::max(1.0f, std::abs(one.second[i])));
  }
}
