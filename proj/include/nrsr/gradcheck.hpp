#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nrsr/autograd.hpp"

namespace nrsr {

struct GradCheckOptions {
  double step = 1e-4;
  /// Upper bound on coordinates probed per input tensor; 0 probes all.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose perturbation moved a PReLU input across zero. The
  /// central difference is not an oracle there, so they are not scored.
  std::size_t skipped_kinks = 0;
  std::string worst;
};

struct GradCheckInput {
  std::string name;
  Var<double> var;
};

/// Compares reverse-mode gradients of `loss` against central differences.
/// `loss` must rebuild the graph from the given leaves on every call and
/// return a single-element node. Error per coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const std::function<Var<double>()>& loss,
                           const std::vector<GradCheckInput>& inputs, const GradCheckOptions& options = {});

/// Randomized single-op and network cases shared by the CLI and the tests.
/// Known names: conv2d, deconv2d, prelu, mse, concat, linear, lfcr, vdsr4,
/// vdsr20.
GradCheckResult run_gradcheck_case(const std::string& name, std::uint64_t seed);
std::vector<std::string> gradcheck_case_names();

}  // namespace nrsr
