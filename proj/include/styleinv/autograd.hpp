#pragma once

// Tape-free reverse-mode differentiation over a dynamically built graph.
//
// Every op records its inputs and a backward closure that maps the output
// gradient to input gradients *using the same differentiable ops*. Running
// the backward pass with create_graph=true therefore yields gradients that are
// themselves differentiable, which is what gradient penalties (R1) need.

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "styleinv/tensor.hpp"

namespace styleinv {

template <typename T>
class Var;

namespace detail {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // leaves only, filled by backward()
  bool requires_grad = false;
  std::vector<Var<T>> inputs;
  std::function<std::vector<Var<T>>(const Var<T>&)> backward;
  std::string_view op = "leaf";
};

}  // namespace detail

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class EnableGradGuard {
 public:
  EnableGradGuard();
  ~EnableGradGuard();
  EnableGradGuard(const EnableGradGuard&) = delete;
  EnableGradGuard& operator=(const EnableGradGuard&) = delete;

 private:
  bool previous_;
};

/// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  using Node = detail::Node<T>;
  using BackwardFn = std::function<std::vector<Var>(const Var&)>;

  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  static Var parameter(Tensor<T> value) { return Var(std::move(value), true); }

  /// Builds a non-leaf result; records the graph only when gradients are
  /// enabled and some input requires them.
  static Var from_op(Tensor<T> value, std::vector<Var> inputs, BackwardFn backward, std::string_view op) {
    Var out(std::move(value));
    bool needs = false;
    if (grad_enabled())
      for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs) {
      out.node_->requires_grad = true;
      out.node_->inputs = std::move(inputs);
      out.node_->backward = std::move(backward);
      out.node_->op = op;
    }
    return out;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t numel() const { return node_->value.numel(); }
  T item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
    return node_->value[0];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  void set_requires_grad(bool on) {
    if (!is_leaf()) throw std::logic_error("requires_grad can only be toggled on leaves");
    node_->requires_grad = on;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad; }
  void zero_grad() { node_->grad = Tensor<T>(); }

  std::string_view op() const { return node_->op; }
  Node* node() const { return node_.get(); }
  bool same_node(const Var& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Gradients of scalar `output` with respect to `wrt`. Inputs that do not
/// influence the output get zero tensors.
template <typename T>
std::vector<Var<T>> grad(const Var<T>& output, const std::vector<Var<T>>& wrt, bool create_graph = false);

/// Accumulates d(output)/d(leaf) into the .grad of every reachable leaf that
/// requires gradients.
template <typename T>
void backward(const Var<T>& output);

}  // namespace styleinv
