#include "lexigan/autodiff/optim.hpp"

#include <cmath>
#include <string>

#include "lexigan/errors.hpp"

namespace lexigan::ad {

namespace {

template <typename T>
void check_alignment(const OptimizerState<T>& state, std::span<Tensor<T>> params,
                     std::span<const std::vector<T>> grads, OptimizerKind kind, const char* op) {
  if (state.kind != kind) throw ValidationError(std::string(op) + ": optimizer state has the wrong kind");
  if (params.size() != state.second.size() || grads.size() != params.size()) {
    throw ValidationError(std::string(op) + ": expected " + std::to_string(state.second.size()) +
                          " parameters and gradients, got " + std::to_string(params.size()) + " and " +
                          std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != state.second[i].size() || grads[i].size() != params[i].size()) {
      throw ValidationError(std::string(op) + ": parameter " + std::to_string(i) + " has shape " +
                            shape_string(params[i].shape()) + " but its accumulator/gradient sizes are " +
                            std::to_string(state.second[i].size()) + "/" + std::to_string(grads[i].size()));
    }
  }
}

}  // namespace

template <typename T>
OptimizerState<T> OptimizerState<T>::create(OptimizerKind kind, std::span<const Tensor<T>> params,
                                            OptimizerHyper hyper) {
  OptimizerState s;
  s.kind = kind;
  s.hyper = hyper;
  for (const auto& p : params) {
    if (kind == OptimizerKind::adam) s.first.emplace_back(p.size(), T(0));
    s.second.emplace_back(p.size(), T(0));
  }
  return s;
}

template <typename T>
void adam_step(OptimizerState<T>& state, std::span<Tensor<T>> params, std::span<const std::vector<T>> grads) {
  check_alignment(state, params, grads, OptimizerKind::adam, "adam_step");
  const auto& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(h.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(h.beta2, t)));
  const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
  const T lr = static_cast<T>(h.learning_rate), eps = static_cast<T>(h.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto& m = state.first[i];
    auto& v = state.second[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      p[j] -= lr * (m[j] * c1) / (std::sqrt(v[j] * c2) + eps);
    }
  }
}

template <typename T>
void rmsprop_step(OptimizerState<T>& state, std::span<Tensor<T>> params, std::span<const std::vector<T>> grads) {
  check_alignment(state, params, grads, OptimizerKind::rmsprop, "rmsprop_step");
  const auto& h = state.hyper;
  state.step += 1;
  const T rho = static_cast<T>(h.decay);
  const T lr = static_cast<T>(h.learning_rate), eps = static_cast<T>(h.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto& v = state.second[i];
    const auto& g = grads[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = rho * v[j] + (T(1) - rho) * g[j] * g[j];
      p[j] -= lr * g[j] / std::sqrt(v[j] + eps);
    }
  }
}

template <typename T>
void apply_step(OptimizerState<T>& state, std::span<Tensor<T>> params) {
  std::vector<std::vector<T>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    if (p.has_grad()) {
      grads.emplace_back(p.grad().begin(), p.grad().end());
    } else {
      grads.emplace_back(p.size(), T(0));
    }
  }
  if (state.kind == OptimizerKind::adam) {
    adam_step(state, params, std::span<const std::vector<T>>(grads));
  } else {
    rmsprop_step(state, params, std::span<const std::vector<T>>(grads));
  }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adam_step(OptimizerState<float>&, std::span<Tensor<float>>, std::span<const std::vector<float>>);
template void adam_step(OptimizerState<double>&, std::span<Tensor<double>>, std::span<const std::vector<double>>);
template void rmsprop_step(OptimizerState<float>&, std::span<Tensor<float>>, std::span<const std::vector<float>>);
template void rmsprop_step(OptimizerState<double>&, std::span<Tensor<double>>,
                           std::span<const std::vector<double>>);
template void apply_step(OptimizerState<float>&, std::span<Tensor<float>>);
template void apply_step(OptimizerState<double>&, std::span<Tensor<double>>);

}  // namespace lexigan::ad
