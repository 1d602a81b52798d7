#include "styleinv/optim.hpp"

#include <cmath>

namespace styleinv {

template <typename T>
Adam<T>::Adam(std::vector<std::pair<std::string, Var<T>>> params, AdamOptions opt)
    : params_(std::move(params)), opt_(opt) {
  for (const auto& [name, p] : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(opt_.beta1), b2 = static_cast<T>(opt_.beta2);
  const T step = static_cast<T>(opt_.lr / bc1), inv_bc2 = static_cast<T>(1.0 / bc2), eps = static_cast<T>(opt_.eps);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k].second;
    if (!p.requires_grad() || !p.has_grad()) continue;
    auto& value = p.mutable_value();
    const auto& g = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.numel(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      value[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
    }
    p.zero_grad();
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

template class Adam<float>;
template class Adam<double>;

}  // namespace styleinv
