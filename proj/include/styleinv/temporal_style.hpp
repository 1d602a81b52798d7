#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "styleinv/nn.hpp"

namespace styleinv {

struct StyleHeadConfig {
  std::size_t code_dim = 64;
  std::size_t w_dim = 64;
  std::size_t hidden_dim = 64;
  std::size_t style_dim = 64;
  /// Channel count of every modulation site, in order.
  std::vector<std::size_t> site_channels;
};

/// s_t = fc2(lrelu(fc1([v_t, w0]))), plus one affine per modulation site
/// producing (gamma, beta) with gamma = 1 + raw.
template <typename T>
class StyleHead {
 public:
  StyleHead(const StyleHeadConfig& cfg, std::uint64_t seed);

  const StyleHeadConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  /// v [N,code_dim], w0 [N,w_dim] -> s [N,style_dim].
  Var<T> fuse(const Var<T>& v, const Var<T>& w0) const;
  /// (gamma, beta), each [N, site_channels[site]].
  std::pair<Var<T>, Var<T>> site_params(const Var<T>& s, std::size_t site) const;
  std::size_t num_sites() const { return cfg_.site_channels.size(); }

  FullyConnected<T>& fc1() { return fc1_; }
  FullyConnected<T>& fc2() { return fc2_; }
  FullyConnected<T>& site_affine(std::size_t site) { return affines_.at(site); }

 private:
  StyleHeadConfig cfg_;
  ParameterSet<T> params_;
  FullyConnected<T> fc1_, fc2_;
  std::vector<FullyConnected<T>> affines_;
};

}  // namespace styleinv
