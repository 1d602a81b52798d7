#pragma once

// Differentiable tensor ops. Binary elementwise ops require equal shapes;
// broadcasting is explicit through expand()/sum_to(), which are adjoints.

#include <cstdint>
#include <memory>
#include <vector>

#include "styleinv/autograd.hpp"

namespace styleinv {

template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

/// Same value, cut from the graph.
template <typename T>
Var<T> detach(const Var<T>& x) {
  return Var<T>(x.value(), false);
}

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> neg(const Var<T>& x);
template <typename T> Var<T> scale(const Var<T>& x, T c);
template <typename T> Var<T> add_scalar(const Var<T>& x, T c);
template <typename T> Var<T> square(const Var<T>& x);
template <typename T> Var<T> leaky_relu(const Var<T>& x, T slope);
template <typename T> Var<T> sigmoid(const Var<T>& x);
template <typename T> Var<T> softplus(const Var<T>& x);
/// (x + eps)^(-1/2)
template <typename T> Var<T> rsqrt(const Var<T>& x, T eps);

template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);
/// Broadcast along axes where x has extent 1; ranks must agree.
template <typename T> Var<T> expand(const Var<T>& x, const Shape& shape);
/// Sum along axes where `shape` has extent 1; adjoint of expand().
template <typename T> Var<T> sum_to(const Var<T>& x, const Shape& shape);

template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);
template <typename T> Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t start, std::size_t length);
/// Zero tensor with `full` extent along `axis` and x written at `start`.
template <typename T> Var<T> pad_slice(const Var<T>& x, std::size_t axis, std::size_t start, std::size_t full);

template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);

/// op(a) * op(b) for rank-2 operands.
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b, bool trans_a = false, bool trans_b = false);

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

/// x [N,C,H,W] * w [O,C,KH,KW] -> [N,O,OH,OW]; no bias.
template <typename T> Var<T> conv2d(const Var<T>& x, const Var<T>& w, ConvGeometry geom);
/// Adjoint of conv2d in x: g [N,O,OH,OW] -> [N,C,in_h,in_w].
template <typename T>
Var<T> conv2d_input_grad(const Var<T>& g, const Var<T>& w, ConvGeometry geom, std::size_t in_h, std::size_t in_w);
/// Adjoint of conv2d in w: (x, g) -> [O,C,kh,kw].
template <typename T>
Var<T> conv2d_weight_grad(const Var<T>& x, const Var<T>& g, ConvGeometry geom, std::size_t kh, std::size_t kw);

/// Nearest-neighbour x2 upsampling of [N,C,H,W].
template <typename T> Var<T> upsample2x(const Var<T>& x);
/// 2x2 sum pooling; adjoint of upsample2x.
template <typename T> Var<T> sumpool2x(const Var<T>& x);

/// Per-sample spatial index map: out[p] = in[map[p]] over H*W positions; a
/// null map is the identity.
using SpatialMap = std::shared_ptr<const std::vector<std::uint32_t>>;

/// x [N,C,H,W]; maps.size() == N.
template <typename T> Var<T> remap_spatial(const Var<T>& x, const std::vector<SpatialMap>& maps);
/// Adjoint of remap_spatial (scatter-add).
template <typename T> Var<T> remap_spatial_adjoint(const Var<T>& x, const std::vector<SpatialMap>& maps);

template <typename T> inline Var<T> operator+(const Var<T>& a, const Var<T>& b) { return add(a, b); }
template <typename T> inline Var<T> operator-(const Var<T>& a, const Var<T>& b) { return sub(a, b); }
template <typename T> inline Var<T> operator*(const Var<T>& a, const Var<T>& b) { return mul(a, b); }

}  // namespace styleinv
