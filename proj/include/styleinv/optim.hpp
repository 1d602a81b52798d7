#pragma once

#include <string>
#include <utility>
#include <vector>

#include "styleinv/autograd.hpp"

namespace styleinv {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Adam over a fixed list of leaves. Leaves with requires_grad off, or with
/// no accumulated gradient, are left untouched.
template <typename T>
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, Var<T>>> params, AdamOptions opt);

  /// Applies one update from the leaves' .grad and clears them.
  void step();
  void zero_grad();

  const AdamOptions& options() const { return opt_; }
  std::size_t steps_taken() const { return t_; }
  const std::vector<std::pair<std::string, Var<T>>>& params() const { return params_; }

 private:
  std::vector<std::pair<std::string, Var<T>>> params_;
  std::vector<Tensor<T>> m_, v_;
  AdamOptions opt_;
  std::size_t t_ = 0;
};

}  // namespace styleinv
