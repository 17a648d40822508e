#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lexigan/autodiff/tensor.hpp"

namespace lexigan::ad {

/// Topologically ordered view of the recorded graph reachable from one root.
/// Every entry's inputs appear before it, and each op appears exactly once.
template <typename T>
class ComputationTape {
 public:
  explicit ComputationTape(const Tensor<T>& root);

  std::size_t size() const noexcept { return entries_.size(); }
  /// Op outputs in forward order.
  std::span<const Tensor<T>> entries() const noexcept { return entries_; }

  /// Accumulates d(root)/d(leaf) into every reachable leaf that requires a
  /// gradient. `root` must be a scalar. Returns the number of nodes visited.
  std::size_t backward();

  /// d(root)/d(w) for each tensor in `wrt`, without touching any stored
  /// grad buffers. Branches that do not lead to `wrt` are skipped.
  std::vector<std::vector<T>> gradient(std::span<const Tensor<T>> wrt);

 private:
  std::size_t run(std::span<const Tensor<T>> wrt, std::vector<std::vector<T>>* out);

  Tensor<T> root_;
  std::vector<Tensor<T>> entries_;
};

template <typename T>
void backward(const Tensor<T>& loss) {
  ComputationTape<T>(loss).backward();
}

template <typename T>
std::vector<std::vector<T>> gradient(const Tensor<T>& output, std::span<const Tensor<T>> wrt) {
  return ComputationTape<T>(output).gradient(wrt);
}

extern template class ComputationTape<float>;
extern template class ComputationTape<double>;

}  // namespace lexigan::ad
