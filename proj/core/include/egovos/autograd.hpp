#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "egovos/tensor.hpp"

namespace egovos {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  Tensor& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor::zeros_like(value);
    return grad;
  }
};

}  // namespace detail

/// Handle to a node of the reverse-mode tape. Copies share the node.
///
/// Leaves created with `requires_grad = true` are trainable parameters; every
/// op whose inputs include such a leaf records a backward closure unless a
/// NoGradGuard is active on the calling thread.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  /// Mutable value access for parameter updates; never call on an interior node.
  Tensor& mutable_value() { return node_->value; }
  const std::vector<int>& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad_buffer() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor(); }
  bool defined() const { return static_cast<bool>(node_); }

  /// Builds the result of an op. Records `backward` only when grad mode is on
  /// and at least one parent requires grad.
  static Var from_op(Tensor value, std::vector<Var> parents,
                     std::function<void(detail::Node&)> backward);

  detail::Node& node() const { return *node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Backpropagates from a scalar root (its grad is seeded with 1).
void backward(const Var& root);

bool grad_enabled() noexcept;

/// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace egovos
