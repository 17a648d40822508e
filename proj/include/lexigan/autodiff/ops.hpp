#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lexigan/autodiff/tensor.hpp"

namespace lexigan::ad {

/// Zero padding (conv1d) or cropping (conv1d_transpose) at each end.
struct Conv1dGeometry {
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

/// Symmetric "same" padding: output length ceil(length / stride), with the
/// odd leftover sample going to the right. A transposed conv using the same
/// geometry as a crop maps length L back to L * stride.
Conv1dGeometry same_geometry(std::size_t length, std::size_t kernel, std::size_t stride);

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dGeometry& geo);
std::size_t conv1d_transpose_output_length(std::size_t length, std::size_t kernel, const Conv1dGeometry& geo);

enum class ActivationKind { relu, leaky_relu, tanh, sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double alpha = 0.2;  // leaky_relu slope for negative inputs
};

// Elementwise arithmetic on equal shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> square(const Tensor<T>& a);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

/// Per-row sum over the trailing axes: [B, ...] -> [B].
template <typename T> Tensor<T> row_sum(const Tensor<T>& a);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

/// y[b,o] = sum_i x[b,i] w[i,o] + bias[o].
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const std::optional<Tensor<T>>& bias = std::nullopt);

/// Cross-correlation. x [B,C,L], kernel [F,C,K], bias [F] -> [B,F,L_out].
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernel, const Conv1dGeometry& geo,
                 const std::optional<Tensor<T>>& bias = std::nullopt);

/// Adjoint of conv1d in x. x [B,C,L], kernel [C,F,K], bias [F] ->
/// [B,F,(L-1)*stride+K-pad_left-pad_right].
template <typename T>
Tensor<T> conv1d_transpose(const Tensor<T>& x, const Tensor<T>& kernel, const Conv1dGeometry& geo,
                           const std::optional<Tensor<T>>& bias = std::nullopt);

template <typename T> Tensor<T> activation(const Tensor<T>& x, Activation act);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& x, double alpha = 0.2);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);

/// Constant (non-differentiable) leaky_relu slopes evaluated at x: 1 where
/// x > 0, alpha elsewhere.
template <typename T> Tensor<T> leaky_relu_slope(const Tensor<T>& x, double alpha = 0.2);

/// Shifts row (b,c) of x [B,C,L] right by shifts[b*C+c] samples, filling
/// the exposed edge by reflection. |shift| must be < L.
template <typename T> Tensor<T> phase_shuffle(const Tensor<T>& x, std::span<const int> shifts);

/// Mean over the batch of -log softmax(logits[b])[target[b]].
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> targets);

/// Mean over all elements of the binary cross-entropy of sigmoid(logits).
template <typename T>
Tensor<T> sigmoid_cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets);

namespace testing {
/// Makes leaky_relu's backward rule wrong on purpose. Negative control for
/// gradient checks; never enable outside tests and selftest.
void set_backward_fault(bool on);
bool backward_fault();

/// Pins the branch taken by relu / leaky_relu (and leaky_relu_slope) on this
/// thread. While recording, each call stores which inputs were positive;
/// while replaying, calls reuse the stored choices in the same order. A
/// pinned network is smooth in its parameters, so finite differences never
/// straddle a kink. Inactive once destroyed.
class ActivationPattern {
 public:
  ActivationPattern();
  ~ActivationPattern();
  ActivationPattern(const ActivationPattern&) = delete;
  ActivationPattern& operator=(const ActivationPattern&) = delete;

  void record();
  void replay();
};
}  // namespace testing

}  // namespace lexigan::ad
