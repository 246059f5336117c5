#include "nrsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

namespace nrsr {

namespace {

// Sign pattern of every PReLU input reachable from root, in a fixed
// traversal order.
std::vector<bool> prelu_signs(const Var<double>& root) {
  std::vector<bool> signs;
  std::vector<const Node<double>*> stack{root.get()};
  std::unordered_set<const Node<double>*> seen{root.get()};
  while (!stack.empty()) {
    const Node<double>* node = stack.back();
    stack.pop_back();
    if (node->op == "prelu" && !node->inputs.empty()) {
      for (double v : node->inputs[0]->value.values()) signs.push_back(v >= 0.0);
    }
    for (const auto& in : node->inputs) {
      if (in && seen.insert(in.get()).second) stack.push_back(in.get());
    }
  }
  return signs;
}

std::vector<std::size_t> pick_coordinates(std::size_t size, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (limit == 0 || limit >= size) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var<double>()>& loss, const std::vector<GradCheckInput>& inputs,
                           const GradCheckOptions& options) {
  for (const auto& in : inputs) {
    in.var->requires_grad = true;
    in.var->grad = Tensor<double>();
  }
  std::vector<bool> base_signs;
  {
    auto root = loss();
    backward(root);
    base_signs = prelu_signs(root);
  }
  std::vector<Tensor<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& in : inputs) {
    analytic.push_back(in.var->grad.allocated() ? in.var->grad : Tensor<double>(in.var->value.shape()));
  }

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  const double h = options.step;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& value = inputs[k].var->value;
    for (std::size_t i : pick_coordinates(value.size(), options.max_coords_per_input, rng)) {
      const double original = value[i];
      value[i] = original + h;
      auto plus = loss();
      const double f_plus = plus->value[0];
      const bool plus_kink = prelu_signs(plus) != base_signs;
      plus.reset();
      value[i] = original - h;
      auto minus = loss();
      const double f_minus = minus->value[0];
      const bool minus_kink = prelu_signs(minus) != base_signs;
      minus.reset();
      value[i] = original;
      if (plus_kink || minus_kink) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      ++result.checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : INFINITY;
        result.worst = inputs[k].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  for (const auto& in : inputs) in.var->grad = Tensor<double>();
  return result;
}

}  // namespace nrsr
