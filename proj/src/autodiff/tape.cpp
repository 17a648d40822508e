#include "lexigan/autodiff/tape.hpp"

#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "lexigan/errors.hpp"

namespace lexigan::ad {

template <typename T>
ComputationTape<T>::ComputationTape(const Tensor<T>& root) : root_(root) {
  if (!root.defined()) throw UsageError("computation tape built from an undefined tensor");
  // Iterative post-order DFS.
  std::unordered_set<const void*> visited;
  std::vector<std::pair<Tensor<T>, std::size_t>> stack;
  if (root.node()) stack.emplace_back(root, 0);
  visited.insert(root.id());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& inputs = t.node()->inputs;
    if (next < inputs.size()) {
      const Tensor<T>& in = inputs[next++];
      if (in.node() && visited.insert(in.id()).second) stack.emplace_back(in, 0);
      continue;
    }
    entries_.push_back(t);
    stack.pop_back();
  }
}

template <typename T>
std::size_t ComputationTape<T>::backward() {
  if (root_.size() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + shape_string(root_.shape()));
  }
  return run({}, nullptr);
}

template <typename T>
std::vector<std::vector<T>> ComputationTape<T>::gradient(std::span<const Tensor<T>> wrt) {
  if (root_.size() != 1) {
    throw UsageError("gradient requires a scalar output, got shape " + shape_string(root_.shape()));
  }
  std::vector<std::vector<T>> out(wrt.size());
  run(wrt, &out);
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    if (out[i].empty()) out[i].assign(wrt[i].size(), T(0));
  }
  return out;
}

template <typename T>
std::size_t ComputationTape<T>::run(std::span<const Tensor<T>> wrt, std::vector<std::vector<T>>* out) {
  const bool accumulate = out == nullptr;

  // Which tensors need a gradient in this pass.
  std::unordered_map<const void*, std::size_t> targets;
  for (std::size_t i = 0; i < wrt.size(); ++i) targets.emplace(wrt[i].id(), i);
  std::unordered_map<const void*, bool> needs;
  auto leaf_needs = [&](const Tensor<T>& t) {
    return accumulate ? t.requires_grad() : targets.count(t.id()) > 0;
  };
  for (const auto& e : entries_) {
    bool n = !accumulate && targets.count(e.id()) > 0;
    for (const auto& in : e.node()->inputs) {
      if (in.node()) {
        auto it = needs.find(in.id());
        n = n || (it != needs.end() && it->second);
      } else {
        n = n || leaf_needs(in);
      }
    }
    needs[e.id()] = n;
  }
  auto input_needs = [&](const Tensor<T>& in) {
    if (!in.node()) return leaf_needs(in);
    auto it = needs.find(in.id());
    return it != needs.end() && it->second;
  };

  std::unordered_map<const void*, std::vector<T>> grads;
  grads[root_.id()] = std::vector<T>(1, T(1));

  auto buffer_for = [&](const Tensor<T>& in) -> std::vector<T>* {
    if (accumulate && !in.node()) {
      Tensor<T> leaf = in;
      auto& g = leaf.grad_buffer();
      if (g.empty()) g.assign(in.size(), T(0));
      return &g;
    }
    auto& g = grads[in.id()];
    if (g.empty()) g.assign(in.size(), T(0));
    return &g;
  };

  std::size_t visited = 0;
  std::vector<std::vector<T>*> buffers;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    const Tensor<T>& e = *it;
    auto g = grads.find(e.id());
    if (g == grads.end()) continue;  // no gradient flows here
    const auto& node = *e.node();
    buffers.assign(node.inputs.size(), nullptr);
    bool any = false;
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      if (input_needs(node.inputs[i])) {
        buffers[i] = buffer_for(node.inputs[i]);
        any = true;
      }
    }
    std::vector<T> grad_out = std::move(g->second);
    grads.erase(g);
    if (!accumulate) {
      auto t = targets.find(e.id());
      if (t != targets.end()) (*out)[t->second] = grad_out;
    }
    if (any) node.backward(grad_out, buffers);
    ++visited;
  }

  if (!accumulate) {
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      auto g = grads.find(wrt[i].id());
      if (g != grads.end()) (*out)[i] = std::move(g->second);
    }
  }
  return visited;
}

template class ComputationTape<float>;
template class ComputationTape<double>;

}  // namespace lexigan::ad
