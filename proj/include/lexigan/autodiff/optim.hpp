#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lexigan/autodiff/tensor.hpp"

namespace lexigan::ad {

enum class OptimizerKind : std::uint8_t { adam = 0, rmsprop = 1 };

struct OptimizerHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;    // adam
  double beta2 = 0.999;  // adam
  double decay = 0.9;    // rmsprop
  double epsilon = 1e-8;

  static OptimizerHyper adam(double lr = 1e-4) { return {lr, 0.9, 0.999, 0.9, 1e-8}; }
  static OptimizerHyper rmsprop(double lr = 1e-4) { return {lr, 0.9, 0.999, 0.9, 1e-10}; }
};

/// Per-parameter accumulators. For adam `first`/`second` are the moment
/// estimates; for rmsprop only `second` (the mean square) is used.
template <typename T>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  OptimizerHyper hyper;
  std::vector<std::vector<T>> first;
  std::vector<std::vector<T>> second;
  std::uint64_t step = 0;

  static OptimizerState create(OptimizerKind kind, std::span<const Tensor<T>> params, OptimizerHyper hyper);
};

template <typename T>
void adam_step(OptimizerState<T>& state, std::span<Tensor<T>> params, std::span<const std::vector<T>> grads);

template <typename T>
void rmsprop_step(OptimizerState<T>& state, std::span<Tensor<T>> params, std::span<const std::vector<T>> grads);

/// Dispatches on state.kind using each parameter's accumulated grad buffer
/// (a parameter without a grad is treated as having a zero gradient).
template <typename T>
void apply_step(OptimizerState<T>& state, std::span<Tensor<T>> params);

}  // namespace lexigan::ad
