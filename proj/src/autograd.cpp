#include "styleinv/autograd.hpp"

#include <unordered_map>
#include <unordered_set>

#include "styleinv/ops.hpp"

namespace styleinv {
namespace {

thread_local bool g_grad_enabled = true;

template <typename T>
std::vector<detail::Node<T>*> topo_order(const Var<T>& root) {
  using Node = detail::Node<T>;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    Node* node;
    std::size_t next;
  };
  std::vector<Frame> stack;
  if (!root.requires_grad()) return order;
  stack.push_back({root.node(), 0});
  seen.insert(root.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->inputs.size()) {
      const Var<T>& in = f.node->inputs[f.next++];
      if (in.requires_grad() && seen.insert(in.node()).second) stack.push_back({in.node(), 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  return order;  // post-order: inputs before consumers
}

template <typename T>
void accumulate(Var<T>& slot, const Var<T>& g) {
  slot = slot.defined() ? add(slot, g) : g;
}

template <typename T>
std::unordered_map<detail::Node<T>*, Var<T>> run(const Var<T>& output, bool accumulate_leaves,
                                                 const std::unordered_set<detail::Node<T>*>& keep) {
  if (output.numel() != 1) throw ShapeError("backward requires a scalar output, got " + output.shape().str());
  std::unordered_map<detail::Node<T>*, Var<T>> grads;
  auto order = topo_order(output);
  if (order.empty()) return grads;
  grads[output.node()] = Var<T>(Tensor<T>(output.shape(), T(1)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* node = *it;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    Var<T> g = found->second;
    if (!node->backward) {
      if (accumulate_leaves) {
        if (node->grad.empty())
          node->grad = g.value();
        else
          for (std::size_t i = 0; i < node->grad.numel(); ++i) node->grad[i] += g.value()[i];
      }
      continue;
    }
    if (!keep.contains(node)) grads.erase(found);
    auto input_grads = node->backward(g);
    for (std::size_t k = 0; k < node->inputs.size(); ++k) {
      const Var<T>& in = node->inputs[k];
      if (!in.requires_grad() || k >= input_grads.size() || !input_grads[k].defined()) continue;
      if (input_grads[k].shape() != in.shape())
        throw ShapeError(std::string("gradient shape mismatch in op ") + std::string(node->op));
      accumulate(grads[in.node()], input_grads[k]);
    }
  }
  return grads;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
EnableGradGuard::EnableGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = true; }
EnableGradGuard::~EnableGradGuard() { g_grad_enabled = previous_; }

template <typename T>
std::vector<Var<T>> grad(const Var<T>& output, const std::vector<Var<T>>& wrt, bool create_graph) {
  std::unordered_set<detail::Node<T>*> keep;
  for (const auto& w : wrt) keep.insert(w.node());
  std::unordered_map<detail::Node<T>*, Var<T>> grads;
  if (create_graph) {
    EnableGradGuard guard;
    grads = run(output, false, keep);
  } else {
    NoGradGuard guard;
    grads = run(output, false, keep);
  }
  std::vector<Var<T>> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grads.find(w.node());
    out.push_back(it != grads.end() ? it->second : Var<T>(Tensor<T>(w.shape())));
  }
  return out;
}

template <typename T>
void backward(const Var<T>& output) {
  NoGradGuard guard;
  run(output, true, {});
}

template std::vector<Var<float>> grad(const Var<float>&, const std::vector<Var<float>>&, bool);
template std::vector<Var<double>> grad(const Var<double>&, const std::vector<Var<double>>&, bool);
template void backward(const Var<float>&);
template void backward(const Var<double>&);

}  // namespace styleinv
