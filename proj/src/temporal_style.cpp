#include "styleinv/temporal_style.hpp"

namespace styleinv {

template <typename T>
StyleHead<T>::StyleHead(const StyleHeadConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  Initializer init(seed);
  fc1_ = FullyConnected<T>(params_, "style.fc1", cfg_.code_dim + cfg_.w_dim, cfg_.hidden_dim, init);
  fc2_ = FullyConnected<T>(params_, "style.fc2", cfg_.hidden_dim, cfg_.style_dim, init);
  // Zero weights: every site starts at the identity modulation.
  for (std::size_t i = 0; i < cfg_.site_channels.size(); ++i)
    affines_.emplace_back(params_, "style.site" + std::to_string(i), cfg_.style_dim, 2 * cfg_.site_channels[i], init,
                          LayerOptions{.init_std = 0.0});
}

template <typename T>
Var<T> StyleHead<T>::fuse(const Var<T>& v, const Var<T>& w0) const {
  if (v.shape().rank() != 2 || w0.shape().rank() != 2 || v.shape()[0] != w0.shape()[0] ||
      v.shape()[1] != cfg_.code_dim || w0.shape()[1] != cfg_.w_dim)
    throw ShapeError("fuse expects v [N," + std::to_string(cfg_.code_dim) + "] and w0 [N," + std::to_string(cfg_.w_dim) +
                     "], got " + v.shape().str() + " and " + w0.shape().str());
  return fc2_(leaky_relu(fc1_(concat<T>({v, w0}, 1)), T(0.2)));
}

template <typename T>
std::pair<Var<T>, Var<T>> StyleHead<T>::site_params(const Var<T>& s, std::size_t site) const {
  if (site >= affines_.size())
    throw std::out_of_range("modulation site " + std::to_string(site) + " of " + std::to_string(affines_.size()));
  const std::size_t c = cfg_.site_channels[site];
  auto raw = affines_[site](s);
  return {add_scalar(slice(raw, 1, 0, c), T(1)), slice(raw, 1, c, c)};
}

template class StyleHead<float>;
template class StyleHead<double>;

}  // namespace styleinv
