#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "lexigan/autodiff/tensor.hpp"

namespace lexigan::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst;  // "tensor[index]: analytic vs numeric"
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  // 0 checks every entry; otherwise a deterministic spread of this many per tensor.
  std::size_t max_entries_per_tensor = 0;
  // Relative errors use max(|analytic|, |numeric|, floor) as the denominator,
  // where floor = floor_fraction * max |analytic| over the same tensor. This
  // keeps round-off on near-zero entries from dominating.
  double floor_fraction = 1e-3;
  // Hold relu / leaky_relu branches at their values for the analytic pass, so
  // perturbations cannot cross a kink (see testing::ActivationPattern).
  bool pin_activations = false;
};

/// Compares reverse-mode gradients of a scalar `loss` against central finite
/// differences. `loss` must rebuild the graph from the current values of
/// `params` on every call.
GradCheckResult check_gradients(const std::function<Tensor<double>()>& loss, std::span<Tensor<double>> params,
                                std::span<const std::string> names = {}, GradCheckOptions options = {});

}  // namespace lexigan::ad
