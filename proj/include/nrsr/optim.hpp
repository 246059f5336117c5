#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nrsr/autograd.hpp"

namespace nrsr {

/// A named parameter block of a model (weights, bias or PReLU slopes).
template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
  bool trainable = true;
};

template <typename T>
using ParameterList = std::vector<Parameter<T>>;

template <typename T>
void zero_grad(const ParameterList<T>& params) {
  for (const auto& p : params) p.var->grad = Tensor<T>();
}

template <typename T>
std::size_t count_trainable(const ParameterList<T>& params) {
  std::size_t total = 0;
  for (const auto& p : params) {
    if (p.trainable) total += p.var->value.size();
  }
  return total;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are keyed by parameter name so the
/// state can be checkpointed and restored independently of object identity.
template <typename T>
class Adam {
 public:
  struct Moments {
    Tensor<T> first;
    Tensor<T> second;
  };

  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update to every trainable parameter. Missing gradients count
  /// as zero. Throws NumericalError before touching any parameter if a
  /// gradient is not finite.
  void step(const ParameterList<T>& params, double lr) {
    for (const auto& p : params) {
      if (!p.trainable || !p.var->grad.allocated()) continue;
      for (T g : p.var->grad.values()) {
        if (!std::isfinite(static_cast<double>(g))) {
          throw NumericalError("adam: non-finite gradient in " + p.name);
        }
      }
    }
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(config_.beta1, t);
    const double c2 = 1.0 - std::pow(config_.beta2, t);
    for (const auto& p : params) {
      if (!p.trainable) continue;
      auto& value = p.var->value;
      auto [it, inserted] = moments_.try_emplace(p.name);
      Moments& m = it->second;
      if (inserted || !(m.first.shape() == value.shape())) {
        m.first = Tensor<T>(value.shape());
        m.second = Tensor<T>(value.shape());
      }
      const bool has_grad = p.var->grad.allocated();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = has_grad ? static_cast<double>(p.var->grad[i]) : 0.0;
        const double m1 = config_.beta1 * m.first[i] + (1.0 - config_.beta1) * g;
        const double m2 = config_.beta2 * m.second[i] + (1.0 - config_.beta2) * g * g;
        m.first[i] = static_cast<T>(m1);
        m.second[i] = static_cast<T>(m2);
        const double update = lr * (m1 / c1) / (std::sqrt(m2 / c2) + config_.epsilon);
        value[i] = static_cast<T>(value[i] - update);
      }
    }
  }

  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t steps) { steps_ = steps; }
  const AdamConfig& config() const { return config_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }
  std::map<std::string, Moments>& moments() { return moments_; }

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace nrsr
