#ifndef LISTEREO_TENSOR_HPP_
#define LISTEREO_TENSOR_HPP_

#include <functional>
#include <memory>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "listereo/common.hpp"

namespace listereo {

namespace detail {

// One node of the recorded computation graph. Values are immutable once the
// node is built; `grad` is the additive accumulator filled by backward().
template <class T>
struct Node {
  Shape shape;
  std::vector<T> values;
  bool requires_grad = false;
  std::vector<T> grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backprop;
  // Set once a backward pass has consumed this node; a second pass through
  // the same node without a reset is an error.
  bool grad_consumed = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), T(0));
  }
};

inline thread_local bool g_grad_enabled = true;

}  // namespace detail

// Disables graph recording in scope (inference / finite-difference probes).
struct NoGradGuard {
  NoGradGuard() : prev_(detail::g_grad_enabled) {
    detail::g_grad_enabled = false;
  }
  ~NoGradGuard() { detail::g_grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool grad_recording_enabled() { return detail::g_grad_enabled; }

// Value-semantic handle to an immutable rank-4 array participating in
// reverse-mode differentiation.
template <class T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;

  static Tensor zeros(Shape s, bool requires_grad = false) {
    return full(s, T(0), requires_grad);
  }

  static Tensor full(Shape s, T v, bool requires_grad = false) {
    check_shape(s.n >= 1 && s.c >= 1 && s.h >= 1 && s.w >= 1,
                "tensor shape components must be >= 1, got " + s.str());
    auto n = std::make_shared<detail::Node<T>>();
    n->shape = s;
    n->values.assign(std::size_t(s.count()), v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor from_data(Shape s, std::vector<T> data,
                          bool requires_grad = false) {
    check_shape(s.n >= 1 && s.c >= 1 && s.h >= 1 && s.w >= 1,
                "tensor shape components must be >= 1, got " + s.str());
    check_shape(std::int64_t(data.size()) == s.count(),
                "value count does not match shape " + s.str());
    auto n = std::make_shared<detail::Node<T>>();
    n->shape = s;
    n->values = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t size() const { return node_->shape.count(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  const T* data() const { return node_->values.data(); }
  std::span<const T> values() const {
    return {node_->values.data(), node_->values.size()};
  }
  T at(int n, int c, int y, int x) const {
    return node_->values[std::size_t(node_->shape.index(n, c, y, x))];
  }
  T item() const {
    check_shape(shape().is_scalar(), "item() requires a scalar tensor");
    return node_->values[0];
  }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  std::span<const T> grad() const {
    check_shape(has_grad(), "tensor has no gradient");
    return {node_->grad.data(), node_->grad.size()};
  }

  // Zeroes the accumulator and re-arms the node for another backward pass.
  void clear_grad() {
    node_->grad.clear();
    node_->grad_consumed = false;
  }

  // Same values, detached from the recorded graph.
  Tensor detach() const {
    auto n = std::make_shared<detail::Node<T>>();
    n->shape = node_->shape;
    n->values = node_->values;
    n->requires_grad = false;
    return Tensor(std::move(n));
  }

  std::shared_ptr<detail::Node<T>>& node() { return node_; }
  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node<T>> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

namespace detail {

// Builds an op output node; parents/backprop recorded only when tracing.
template <class T>
Tensor<T> make_result(Shape s, std::vector<T> values,
                      std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backprop) {
  auto n = std::make_shared<Node<T>>();
  n->shape = s;
  n->values = std::move(values);
  bool any_grad = false;
  for (const auto& p : parents) any_grad = any_grad || p->requires_grad;
  if (g_grad_enabled && any_grad) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return Tensor<T>(std::move(n));
}

}  // namespace detail

// Reverse-mode pass from a scalar loss. Populates grad for every
// requires_grad tensor on the traced path, in exact reverse topological
// order with additive accumulation.
template <class T>
void backward(const Tensor<T>& loss) {
  check_shape(loss.shape().is_scalar(),
              "backward requires a scalar loss, got " + loss.shape().str());
  using NodeT = detail::Node<T>;
  NodeT* root = loss.node().get();
  if (root->grad_consumed)
    throw Error("backward called twice without clearing gradients");

  // Iterative post-order DFS yields a topological order.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT* p = node->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (n->grad_consumed)
      throw Error("backward reached a node already consumed by a previous "
                  "pass; clear gradients first");
  }

  root->ensure_grad();
  root->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    n->grad_consumed = true;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace listereo

#endif  // LISTEREO_TENSOR_HPP_
