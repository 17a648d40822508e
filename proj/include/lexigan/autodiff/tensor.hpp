#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lexigan::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
class Tensor;

/// One recorded operation. `backward` receives the gradient w.r.t. the
/// node's output and one accumulation buffer per input; a null buffer means
/// that input's gradient is not wanted in the current pass and must be skipped.
template <typename T>
struct Node {
  using BackwardFn = std::function<void(std::span<const T> grad_out, std::span<std::vector<T>* const> grad_in)>;

  const char* op = "";
  std::vector<Tensor<T>> inputs;
  BackwardFn backward;
};

namespace detail {

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a backward pass reaches this leaf
  bool requires_grad = false;
  std::shared_ptr<Node<T>> node;  // null for leaves
};

}  // namespace detail

/// Dense row-major tensor with shared ownership. Copies of a Tensor alias the
/// same storage, which is how parameters are shared between a network and
/// the graphs built from it.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);
  static Tensor vector(std::initializer_list<T> values, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<const T> data() const { return impl_->data; }
  // Direct writes bypass the tape. Only optimizers, initializers and tests
  // should use this, and only on leaves.
  std::span<T> mutable_data() { return impl_->data; }

  T item() const;
  T operator[](std::size_t i) const { return impl_->data[i]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool is_leaf() const { return impl_->node == nullptr; }
  const std::shared_ptr<Node<T>>& node() const { return impl_->node; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::vector<T>& grad_buffer() { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  /// Fresh leaf holding a copy of the values.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  const void* id() const noexcept { return impl_.get(); }
  detail::TensorImpl<T>* impl() const noexcept { return impl_.get(); }

  /// Builds an op output. Attaches `node` only when gradients are being
  /// recorded and some input requires them.
  static Tensor make_result(Shape shape, std::vector<T> data, const char* op,
                            std::vector<Tensor> inputs, typename Node<T>::BackwardFn backward);

 private:
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

/// Suspends tape recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool recording() noexcept;

 private:
  bool previous_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lexigan::ad
