#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "styleinv/ops.hpp"
#include "styleinv/rng.hpp"

namespace styleinv {

/// Ordered, named collection of trainable leaves. Layers keep handles into it,
/// so mutating a value here is visible to the owning network.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, Var<T>>;

  // Copies would alias the same tensors; clone through copy_values_from.
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Var<T> add(const std::string& name, Tensor<T> init) {
    if (index_.contains(name)) throw std::logic_error("duplicate parameter " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, Var<T>::parameter(std::move(init)));
    return entries_.back().second;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& name) const { return index_.contains(name); }

  const Var<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return entries_[it->second].second;
  }
  Var<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return entries_[it->second].second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, v] : entries_) out.push_back(n);
    return out;
  }

  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [n, v] : entries_)
      if (n.starts_with(prefix)) out.push_back(n);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, v] : entries_) n += v.numel();
    return n;
  }

  /// Copies values for every name in `names` (all when empty). Throws
  /// ShapeError listing every missing or mis-shaped tensor.
  void copy_values_from(const ParameterSet& other, const std::vector<std::string>& names = {}) {
    std::string problems;
    const auto selected = names.empty() ? this->names() : names;
    for (const auto& n : selected) {
      if (!contains(n) || !other.contains(n)) {
        problems += " " + n + "(missing)";
        continue;
      }
      if (at(n).shape() != other.at(n).shape()) problems += " " + n + "(" + at(n).shape().str() + " vs " + other.at(n).shape().str() + ")";
    }
    if (!problems.empty()) throw ShapeError("parameter copy failed:" + problems);
    for (const auto& n : selected) at(n).mutable_value() = other.at(n).value();
  }

  void zero_grad() {
    for (auto& [n, v] : entries_) v.zero_grad();
  }

  void set_requires_grad(bool on) {
    for (auto& [n, v] : entries_) v.set_requires_grad(on);
  }

  void set_requires_grad(const std::set<std::string>& names, bool on) {
    for (auto& [n, v] : entries_)
      if (names.contains(n)) v.set_requires_grad(on);
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parameter initialisation stream; deterministic in the seed.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : gen_(seed, rng::Stream::init) {}

  template <typename T>
  Tensor<T> normal(Shape shape, double stddev) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.vec()) v = static_cast<T>(stddev * gen_.normal());
    return t;
  }

 private:
  rng::Generator gen_;
};

/// Leaky ReLU (slope 0.2) followed by the sqrt(2) gain that keeps activation
/// variance roughly constant through deep stacks.
template <typename T>
Var<T> lrelu_gain(const Var<T>& x) {
  return scale(leaky_relu(x, T(0.2)), static_cast<T>(std::sqrt(2.0)));
}

struct LayerOptions {
  double lr_mul = 1.0;     // equalized learning-rate multiplier
  double init_std = 1.0;   // stddev of the stored weight before lr_mul scaling
  double bias_init = 0.0;
  bool bias = true;
};

/// y = x W^T * gain + b, weights stored at unit scale (equalized learning rate).
template <typename T>
class FullyConnected {
 public:
  FullyConnected() = default;
  FullyConnected(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Initializer& init,
                 LayerOptions opt = {})
      : in_(in), out_(out),
        weight_gain_(static_cast<T>(opt.lr_mul / std::sqrt(static_cast<double>(in)))),
        bias_gain_(static_cast<T>(opt.lr_mul)) {
    weight_ = params.add(name + ".weight", init.normal<T>(Shape{out, in}, opt.init_std / opt.lr_mul));
    if (opt.bias) bias_ = params.add(name + ".bias", Tensor<T>(Shape{out}, static_cast<T>(opt.bias_init / opt.lr_mul)));
  }

  Var<T> operator()(const Var<T>& x) const {
    if (x.shape().rank() != 2 || x.shape()[1] != in_)
      throw ShapeError("fully connected layer expects [N," + std::to_string(in_) + "], got " + x.shape().str());
    auto y = matmul(x, scale(weight_, weight_gain_), false, true);
    if (!bias_.defined()) return y;
    return add(y, expand(reshape(scale(bias_, bias_gain_), Shape{1, out_}), y.shape()));
  }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  T weight_gain() const { return weight_gain_; }
  T bias_gain() const { return bias_gain_; }
  const Var<T>& weight() const { return weight_; }
  const Var<T>& bias() const { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  T weight_gain_ = T(1), bias_gain_ = T(1);
  Var<T> weight_, bias_;
};

template <typename T>
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
              std::size_t stride, Initializer& init, LayerOptions opt = {})
      : in_(in), out_(out), kernel_(kernel),
        geom_{stride, kernel / 2, kernel / 2},
        weight_gain_(static_cast<T>(opt.lr_mul / std::sqrt(static_cast<double>(in * kernel * kernel)))),
        bias_gain_(static_cast<T>(opt.lr_mul)) {
    weight_ = params.add(name + ".weight", init.normal<T>(Shape{out, in, kernel, kernel}, opt.init_std / opt.lr_mul));
    if (opt.bias) bias_ = params.add(name + ".bias", Tensor<T>(Shape{out}, static_cast<T>(opt.bias_init / opt.lr_mul)));
  }

  Var<T> operator()(const Var<T>& x) const {
    auto y = conv2d(x, scale(weight_, weight_gain_), geom_);
    if (!bias_.defined()) return y;
    return add(y, expand(reshape(scale(bias_, bias_gain_), Shape{1, out_, 1, 1}), y.shape()));
  }

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  T weight_gain() const { return weight_gain_; }
  const Var<T>& weight() const { return weight_; }
  const Var<T>& bias() const { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0, kernel_ = 1;
  ConvGeometry geom_;
  T weight_gain_ = T(1), bias_gain_ = T(1);
  Var<T> weight_, bias_;
};

/// x [N,C,H,W] * gamma [N,C] + beta [N,C], broadcast over space.
template <typename T>
Var<T> channel_affine(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const auto& s = x.shape();
  const Shape cs{s[0], s[1], 1, 1};
  return add(mul(x, expand(reshape(gamma, cs), s)), expand(reshape(beta, cs), s));
}

/// Mean over spatial positions: [N,C,H,W] -> [N,C].
template <typename T>
Var<T> spatial_mean(const Var<T>& x) {
  const auto& s = x.shape();
  return reshape(scale(sum_to(x, Shape{s[0], s[1], 1, 1}), T(1) / static_cast<T>(s[2] * s[3])), Shape{s[0], s[1]});
}

}  // namespace styleinv
