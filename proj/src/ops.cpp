#include "styleinv/ops.hpp"

#include <cmath>
#include <string>

#include "styleinv/kernels.hpp"

namespace styleinv {
namespace {

template <typename T>
using VarList = std::vector<Var<T>>;

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

template <typename T, typename F>
Tensor<T> map_values(const Tensor<T>& x, F f) {
  Tensor<T> out(x.shape());
  const T* src = x.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < x.numel(); ++i) dst[i] = f(src[i]);
  return out;
}

// Walks every element of `big`; `small` has extent 1 (or equal extent) per axis.
// Calls f(big_index, small_index).
template <typename F>
void broadcast_walk(const Shape& big, const Shape& small, F f) {
  const std::size_t r = big.rank();
  if (small.rank() != r) throw ShapeError("broadcast rank mismatch " + big.str() + " vs " + small.str());
  std::vector<std::size_t> small_stride(r, 0);
  std::size_t s = 1;
  for (std::size_t d = r; d-- > 0;) {
    if (small[d] != big[d] && small[d] != 1)
      throw ShapeError("cannot broadcast " + small.str() + " to " + big.str());
    small_stride[d] = small[d] == 1 ? 0 : s;
    s *= small[d];
  }
  const std::size_t total = big.numel();
  if (total == 0) return;
  std::vector<std::size_t> idx(r, 0);
  std::size_t small_index = 0;
  const std::size_t inner = r ? big[r - 1] : 1;
  const std::size_t inner_stride = r ? small_stride[r - 1] : 0;
  for (std::size_t base = 0; base < total; base += inner) {
    for (std::size_t j = 0; j < inner; ++j) f(base + j, small_index + j * inner_stride);
    // advance the outer multi-index (all axes but the last)
    for (std::size_t d = r >= 1 ? r - 1 : 0; d-- > 0;) {
      small_index += small_stride[d];
      if (++idx[d] < big[d]) break;
      small_index -= small_stride[d] * big[d];
      idx[d] = 0;
    }
  }
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  if (axis >= s.rank()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + s.str());
  AxisSplit a;
  for (std::size_t d = 0; d < axis; ++d) a.outer *= s[d];
  a.extent = s[axis];
  for (std::size_t d = axis + 1; d < s.rank(); ++d) a.inner *= s[d];
  return a;
}

struct ConvDims {
  std::size_t n, c, h, w, o, kh, kw, oh, ow;
  std::size_t ckk() const { return c * kh * kw; }
  std::size_t ohw() const { return oh * ow; }
  bool direct(const ConvGeometry& g) const {
    return kh == 1 && kw == 1 && g.stride == 1 && g.pad_h == 0 && g.pad_w == 0;
  }
};

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t pad, std::size_t stride) {
  if (in + 2 * pad < k) throw ShapeError("convolution kernel larger than padded input");
  return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
void im2col(const T* x, const ConvDims& d, const ConvGeometry& g, T* col) {
  const std::size_t ohw = d.ohw();
  for (std::size_t c = 0; c < d.c; ++c)
    for (std::size_t ki = 0; ki < d.kh; ++ki)
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        T* row = col + ((c * d.kh + ki) * d.kw + kj) * ohw;
        for (std::size_t oi = 0; oi < d.oh; ++oi) {
          const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
          T* out = row + oi * d.ow;
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill_n(out, d.ow, T(0));
            continue;
          }
          const T* src = x + (c * d.h + static_cast<std::size_t>(ii)) * d.w;
          for (std::size_t oj = 0; oj < d.ow; ++oj) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
            out[oj] = (jj < 0 || jj >= static_cast<std::ptrdiff_t>(d.w)) ? T(0) : src[jj];
          }
        }
      }
}

template <typename T>
void col2im(const T* col, const ConvDims& d, const ConvGeometry& g, T* x) {
  const std::size_t ohw = d.ohw();
  for (std::size_t c = 0; c < d.c; ++c)
    for (std::size_t ki = 0; ki < d.kh; ++ki)
      for (std::size_t kj = 0; kj < d.kw; ++kj) {
        const T* row = col + ((c * d.kh + ki) * d.kw + kj) * ohw;
        for (std::size_t oi = 0; oi < d.oh; ++oi) {
          const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * g.stride + ki) - static_cast<std::ptrdiff_t>(g.pad_h);
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(d.h)) continue;
          T* dst = x + (c * d.h + static_cast<std::size_t>(ii)) * d.w;
          const T* in = row + oi * d.ow;
          for (std::size_t oj = 0; oj < d.ow; ++oj) {
            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * g.stride + kj) - static_cast<std::ptrdiff_t>(g.pad_w);
            if (jj >= 0 && jj < static_cast<std::ptrdiff_t>(d.w)) dst[jj] += in[oj];
          }
        }
      }
}

ConvDims conv_dims(const Shape& x, const Shape& w, const ConvGeometry& g) {
  if (x.rank() != 4 || w.rank() != 4) throw ShapeError("conv2d expects rank-4 input and weight");
  if (x[1] != w[1]) throw ShapeError("conv2d channel mismatch " + x.str() + " vs weight " + w.str());
  if (g.stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvDims d{x[0], x[1], x[2], x[3], w[0], w[2], w[3], 0, 0};
  d.oh = conv_out(d.h, d.kh, g.pad_h, g.stride);
  d.ow = conv_out(d.w, d.kw, g.pad_w, g.stride);
  return d;
}

}  // namespace

// ---------------------------------------------------------------- elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return Var<T>::from_op(std::move(out), {a, b}, [](const Var<T>& g) { return VarList<T>{g, g}; }, "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return Var<T>::from_op(std::move(out), {a, b}, [](const Var<T>& g) { return VarList<T>{g, neg(g)}; }, "sub");
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return Var<T>::from_op(
      std::move(out), {a, b},
      [a, b](const Var<T>& g) {
        return VarList<T>{a.requires_grad() ? mul(g, b) : Var<T>(), b.requires_grad() ? mul(g, a) : Var<T>()};
      },
      "mul");
}

template <typename T>
Var<T> neg(const Var<T>& x) {
  return scale(x, T(-1));
}

template <typename T>
Var<T> scale(const Var<T>& x, T c) {
  return Var<T>::from_op(map_values(x.value(), [c](T v) { return v * c; }), {x},
                         [c](const Var<T>& g) { return VarList<T>{scale(g, c)}; }, "scale");
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, T c) {
  return Var<T>::from_op(map_values(x.value(), [c](T v) { return v + c; }), {x},
                         [](const Var<T>& g) { return VarList<T>{g}; }, "add_scalar");
}

template <typename T>
Var<T> square(const Var<T>& x) {
  return mul(x, x);
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return Var<T>::from_op(map_values(x.value(), [slope](T v) { return v > T(0) ? v : v * slope; }), {x},
                         [x, slope](const Var<T>& g) {
                           // piecewise linear: the slope mask is constant w.r.t. x
                           auto mask = map_values(x.value(), [slope](T v) { return v > T(0) ? T(1) : slope; });
                           return VarList<T>{mul(g, constant(std::move(mask)))};
                         },
                         "leaky_relu");
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  auto f = [](T v) {
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  };
  return Var<T>::from_op(map_values(x.value(), f), {x},
                         [x](const Var<T>& g) {
                           auto s = sigmoid(x);
                           return VarList<T>{mul(g, mul(s, add_scalar(neg(s), T(1))))};
                         },
                         "sigmoid");
}

template <typename T>
Var<T> softplus(const Var<T>& x) {
  auto f = [](T v) { return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); };
  return Var<T>::from_op(map_values(x.value(), f), {x},
                         [x](const Var<T>& g) { return VarList<T>{mul(g, sigmoid(x))}; }, "softplus");
}

template <typename T>
Var<T> rsqrt(const Var<T>& x, T eps) {
  return Var<T>::from_op(map_values(x.value(), [eps](T v) { return T(1) / std::sqrt(v + eps); }), {x},
                         [x, eps](const Var<T>& g) {
                           auto r = rsqrt(x, eps);
                           return VarList<T>{mul(g, scale(mul(r, mul(r, r)), T(-0.5)))};
                         },
                         "rsqrt");
}

// ---------------------------------------------------------------- shape

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  const Shape original = x.shape();
  return Var<T>::from_op(x.value().reshaped(std::move(shape)), {x},
                         [original](const Var<T>& g) { return VarList<T>{reshape(g, original)}; }, "reshape");
}

template <typename T>
Var<T> expand(const Var<T>& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  Tensor<T> out(shape);
  const T* src = x.value().data();
  T* dst = out.data();
  broadcast_walk(shape, x.shape(), [&](std::size_t bi, std::size_t si) { dst[bi] = src[si]; });
  const Shape small = x.shape();
  return Var<T>::from_op(std::move(out), {x},
                         [small](const Var<T>& g) { return VarList<T>{sum_to(g, small)}; }, "expand");
}

template <typename T>
Var<T> sum_to(const Var<T>& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  Tensor<T> out(shape);
  const T* src = x.value().data();
  T* dst = out.data();
  broadcast_walk(x.shape(), shape, [&](std::size_t bi, std::size_t si) { dst[si] += src[bi]; });
  const Shape big = x.shape();
  return Var<T>::from_op(std::move(out), {x},
                         [big](const Var<T>& g) { return VarList<T>{expand(g, big)}; }, "sum_to");
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  std::vector<std::size_t> dims = first.dims();
  if (axis >= dims.size()) throw ShapeError("concat axis out of range");
  dims[axis] = 0;
  for (const auto& p : parts) {
    if (p.shape().rank() != first.rank()) throw ShapeError("concat rank mismatch");
    for (std::size_t d = 0; d < first.rank(); ++d)
      if (d != axis && p.shape()[d] != first[d])
        throw ShapeError("concat shape mismatch " + p.shape().str() + " vs " + first.str());
    dims[axis] += p.shape()[axis];
  }
  Shape out_shape(dims);
  Tensor<T> out(out_shape);
  const AxisSplit os = split_axis(out_shape, axis);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.shape()[axis] * os.inner;
    for (std::size_t o = 0; o < os.outer; ++o)
      std::copy_n(p.value().data() + o * chunk, chunk, out.data() + o * os.extent * os.inner + offset * os.inner);
    offset += p.shape()[axis];
  }
  std::vector<std::size_t> lengths;
  for (const auto& p : parts) lengths.push_back(p.shape()[axis]);
  return Var<T>::from_op(std::move(out), parts,
                         [axis, offsets, lengths](const Var<T>& g) {
                           VarList<T> grads;
                           for (std::size_t i = 0; i < offsets.size(); ++i)
                             grads.push_back(slice(g, axis, offsets[i], lengths[i]));
                           return grads;
                         },
                         "concat");
}

template <typename T>
Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t start, std::size_t length) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (start + length > s.extent) throw ShapeError("slice out of range on " + x.shape().str());
  std::vector<std::size_t> dims = x.shape().dims();
  dims[axis] = length;
  Tensor<T> out{Shape(dims)};
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.value().data() + (o * s.extent + start) * s.inner, length * s.inner,
                out.data() + o * length * s.inner);
  const std::size_t full = s.extent;
  return Var<T>::from_op(std::move(out), {x},
                         [axis, start, full](const Var<T>& g) { return VarList<T>{pad_slice(g, axis, start, full)}; },
                         "slice");
}

template <typename T>
Var<T> pad_slice(const Var<T>& x, std::size_t axis, std::size_t start, std::size_t full) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (start + s.extent > full) throw ShapeError("pad_slice out of range");
  std::vector<std::size_t> dims = x.shape().dims();
  dims[axis] = full;
  Tensor<T> out{Shape(dims)};
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.value().data() + o * s.extent * s.inner, s.extent * s.inner,
                out.data() + (o * full + start) * s.inner);
  const std::size_t length = s.extent;
  return Var<T>::from_op(std::move(out), {x},
                         [axis, start, length](const Var<T>& g) { return VarList<T>{slice(g, axis, start, length)}; },
                         "pad_slice");
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T acc = T(0);
  for (T v : x.value().vec()) acc += v;
  const Shape original = x.shape();
  return Var<T>::from_op(Tensor<T>(Shape{1}, std::vector<T>{acc}), {x},
                         [original](const Var<T>& g) {
                           Shape ones(std::vector<std::size_t>(original.rank(), 1));
                           return VarList<T>{expand(reshape(g, ones), original)};
                         },
                         "sum");
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

// ---------------------------------------------------------------- linear algebra

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, bool trans_a, bool trans_b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2) throw ShapeError("matmul expects rank-2 operands");
  const std::size_t m = trans_a ? a.shape()[1] : a.shape()[0];
  const std::size_t k = trans_a ? a.shape()[0] : a.shape()[1];
  const std::size_t kb = trans_b ? b.shape()[1] : b.shape()[0];
  const std::size_t n = trans_b ? b.shape()[0] : b.shape()[1];
  if (k != kb) throw ShapeError("matmul inner dimension mismatch " + a.shape().str() + " x " + b.shape().str());
  Tensor<T> out(Shape{m, n});
  kernels::gemm<T>(trans_a, trans_b, m, n, k, T(1), a.value().data(), a.shape()[1], b.value().data(), b.shape()[1],
                   T(0), out.data(), n);
  return Var<T>::from_op(
      std::move(out), {a, b},
      [a, b, trans_a, trans_b](const Var<T>& g) {
        Var<T> ga, gb;
        if (!trans_a && !trans_b) {
          if (a.requires_grad()) ga = matmul(g, b, false, true);
          if (b.requires_grad()) gb = matmul(a, g, true, false);
        } else if (!trans_a && trans_b) {
          if (a.requires_grad()) ga = matmul(g, b, false, false);
          if (b.requires_grad()) gb = matmul(g, a, true, false);
        } else if (trans_a && !trans_b) {
          if (a.requires_grad()) ga = matmul(b, g, false, true);
          if (b.requires_grad()) gb = matmul(a, g, false, false);
        } else {
          if (a.requires_grad()) ga = matmul(b, g, true, true);
          if (b.requires_grad()) gb = matmul(g, a, true, true);
        }
        return VarList<T>{ga, gb};
      },
      "matmul");
}

// ---------------------------------------------------------------- convolution

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, ConvGeometry geom) {
  const ConvDims d = conv_dims(x.shape(), w.shape(), geom);
  Tensor<T> out(Shape{d.n, d.o, d.oh, d.ow});
  const bool direct = d.direct(geom);
  std::vector<T> col(direct ? 0 : d.ckk() * d.ohw());
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* xn = x.value().data() + n * d.c * d.h * d.w;
    if (!direct) im2col(xn, d, geom, col.data());
    kernels::gemm<T>(false, false, d.o, d.ohw(), d.ckk(), T(1), w.value().data(), d.ckk(), direct ? xn : col.data(),
                     d.ohw(), T(0), out.data() + n * d.o * d.ohw(), d.ohw());
  }
  return Var<T>::from_op(std::move(out), {x, w},
                         [x, w, geom, d](const Var<T>& g) {
                           return VarList<T>{
                               x.requires_grad() ? conv2d_input_grad(g, w, geom, d.h, d.w) : Var<T>(),
                               w.requires_grad() ? conv2d_weight_grad(x, g, geom, d.kh, d.kw) : Var<T>()};
                         },
                         "conv2d");
}

template <typename T>
Var<T> conv2d_input_grad(const Var<T>& g, const Var<T>& w, ConvGeometry geom, std::size_t in_h, std::size_t in_w) {
  if (g.shape().rank() != 4 || w.shape().rank() != 4 || g.shape()[1] != w.shape()[0])
    throw ShapeError("conv2d_input_grad shape mismatch " + g.shape().str() + " vs " + w.shape().str());
  const Shape xs{g.shape()[0], w.shape()[1], in_h, in_w};
  const ConvDims d = conv_dims(xs, w.shape(), geom);
  if (d.oh != g.shape()[2] || d.ow != g.shape()[3]) throw ShapeError("conv2d_input_grad spatial mismatch");
  Tensor<T> out(xs);
  const bool direct = d.direct(geom);
  std::vector<T> col(d.ckk() * d.ohw());
  for (std::size_t n = 0; n < d.n; ++n) {
    T* xn = out.data() + n * d.c * d.h * d.w;
    kernels::gemm<T>(true, false, d.ckk(), d.ohw(), d.o, T(1), w.value().data(), d.ckk(),
                     g.value().data() + n * d.o * d.ohw(), d.ohw(), T(0), direct ? xn : col.data(), d.ohw());
    if (!direct) col2im(col.data(), d, geom, xn);
  }
  return Var<T>::from_op(std::move(out), {g, w},
                         [g, w, geom, d](const Var<T>& h) {
                           return VarList<T>{g.requires_grad() ? conv2d(h, w, geom) : Var<T>(),
                                             w.requires_grad() ? conv2d_weight_grad(h, g, geom, d.kh, d.kw) : Var<T>()};
                         },
                         "conv2d_input_grad");
}

template <typename T>
Var<T> conv2d_weight_grad(const Var<T>& x, const Var<T>& g, ConvGeometry geom, std::size_t kh, std::size_t kw) {
  if (x.shape().rank() != 4 || g.shape().rank() != 4) throw ShapeError("conv2d_weight_grad expects rank-4");
  const Shape ws{g.shape()[1], x.shape()[1], kh, kw};
  const ConvDims d = conv_dims(x.shape(), ws, geom);
  if (d.oh != g.shape()[2] || d.ow != g.shape()[3] || d.n != g.shape()[0])
    throw ShapeError("conv2d_weight_grad shape mismatch");
  Tensor<T> out(ws);
  const bool direct = d.direct(geom);
  std::vector<T> col(direct ? 0 : d.ckk() * d.ohw());
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* xn = x.value().data() + n * d.c * d.h * d.w;
    if (!direct) im2col(xn, d, geom, col.data());
    kernels::gemm<T>(false, true, d.o, d.ckk(), d.ohw(), T(1), g.value().data() + n * d.o * d.ohw(), d.ohw(),
                     direct ? xn : col.data(), d.ohw(), n == 0 ? T(0) : T(1), out.data(), d.ckk());
  }
  return Var<T>::from_op(std::move(out), {x, g},
                         [x, g, geom, d](const Var<T>& h) {
                           return VarList<T>{x.requires_grad() ? conv2d_input_grad(g, h, geom, d.h, d.w) : Var<T>(),
                                             g.requires_grad() ? conv2d(x, h, geom) : Var<T>()};
                         },
                         "conv2d_weight_grad");
}

// ---------------------------------------------------------------- resampling

template <typename T>
Var<T> upsample2x(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.rank() != 4) throw ShapeError("upsample2x expects [N,C,H,W]");
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  Tensor<T> out(Shape{s[0], s[1], 2 * h, 2 * w});
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.value().data() + p * h * w;
    T* dst = out.data() + p * 4 * h * w;
    for (std::size_t i = 0; i < h; ++i) {
      T* r0 = dst + (2 * i) * 2 * w;
      T* r1 = r0 + 2 * w;
      for (std::size_t j = 0; j < w; ++j) r0[2 * j] = r0[2 * j + 1] = src[i * w + j];
      std::copy_n(r0, 2 * w, r1);
    }
  }
  return Var<T>::from_op(std::move(out), {x}, [](const Var<T>& g) { return VarList<T>{sumpool2x(g)}; },
                         "upsample2x");
}

template <typename T>
Var<T> sumpool2x(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.rank() != 4 || s[2] % 2 || s[3] % 2) throw ShapeError("sumpool2x expects [N,C,H,W] with even H,W");
  const std::size_t planes = s[0] * s[1], h = s[2] / 2, w = s[3] / 2;
  Tensor<T> out(Shape{s[0], s[1], h, w});
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.value().data() + p * 4 * h * w;
    T* dst = out.data() + p * h * w;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T* r0 = src + (2 * i) * 2 * w + 2 * j;
        const T* r1 = r0 + 2 * w;
        dst[i * w + j] = r0[0] + r0[1] + r1[0] + r1[1];
      }
  }
  return Var<T>::from_op(std::move(out), {x}, [](const Var<T>& g) { return VarList<T>{upsample2x(g)}; },
                         "sumpool2x");
}

template <typename T>
Var<T> remap_spatial(const Var<T>& x, const std::vector<SpatialMap>& maps) {
  const Shape& s = x.shape();
  if (s.rank() != 4 || maps.size() != s[0]) throw ShapeError("remap_spatial expects one map per sample");
  const std::size_t hw = s[2] * s[3];
  Tensor<T> out(s);
  for (std::size_t n = 0; n < s[0]; ++n) {
    const T* base = x.value().data() + n * s[1] * hw;
    if (!maps[n]) {
      std::copy_n(base, s[1] * hw, out.data() + n * s[1] * hw);
      continue;
    }
    const auto& m = *maps[n];
    if (m.size() != hw) throw ShapeError("remap_spatial map size mismatch");
    for (std::size_t c = 0; c < s[1]; ++c) {
      const T* src = base + c * hw;
      T* dst = out.data() + (n * s[1] + c) * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] = src[m[p]];
    }
  }
  return Var<T>::from_op(std::move(out), {x},
                         [maps](const Var<T>& g) { return VarList<T>{remap_spatial_adjoint(g, maps)}; },
                         "remap_spatial");
}

template <typename T>
Var<T> remap_spatial_adjoint(const Var<T>& x, const std::vector<SpatialMap>& maps) {
  const Shape& s = x.shape();
  if (s.rank() != 4 || maps.size() != s[0]) throw ShapeError("remap_spatial_adjoint expects one map per sample");
  const std::size_t hw = s[2] * s[3];
  Tensor<T> out(s);
  for (std::size_t n = 0; n < s[0]; ++n) {
    if (!maps[n]) {
      std::copy_n(x.value().data() + n * s[1] * hw, s[1] * hw, out.data() + n * s[1] * hw);
      continue;
    }
    const auto& m = *maps[n];
    if (m.size() != hw) throw ShapeError("remap_spatial_adjoint map size mismatch");
    for (std::size_t c = 0; c < s[1]; ++c) {
      const T* src = x.value().data() + (n * s[1] + c) * hw;
      T* dst = out.data() + (n * s[1] + c) * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[m[p]] += src[p];
    }
  }
  return Var<T>::from_op(std::move(out), {x},
                         [maps](const Var<T>& g) { return VarList<T>{remap_spatial(g, maps)}; },
                         "remap_spatial_adjoint");
}

#define STYLEINV_INSTANTIATE_OPS(T)                                                                   \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                  \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                                  \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                  \
  template Var<T> neg(const Var<T>&);                                                                 \
  template Var<T> scale(const Var<T>&, T);                                                            \
  template Var<T> add_scalar(const Var<T>&, T);                                                       \
  template Var<T> square(const Var<T>&);                                                              \
  template Var<T> leaky_relu(const Var<T>&, T);                                                       \
  template Var<T> sigmoid(const Var<T>&);                                                             \
  template Var<T> softplus(const Var<T>&);                                                            \
  template Var<T> rsqrt(const Var<T>&, T);                                                            \
  template Var<T> reshape(const Var<T>&, Shape);                                                      \
  template Var<T> expand(const Var<T>&, const Shape&);                                                \
  template Var<T> sum_to(const Var<T>&, const Shape&);                                                \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);                                    \
  template Var<T> slice(const Var<T>&, std::size_t, std::size_t, std::size_t);                        \
  template Var<T> pad_slice(const Var<T>&, std::size_t, std::size_t, std::size_t);                    \
  template Var<T> sum(const Var<T>&);                                                                 \
  template Var<T> mean(const Var<T>&);                                                                \
  template Var<T> matmul(const Var<T>&, const Var<T>&, bool, bool);                                   \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, ConvGeometry);                                 \
  template Var<T> conv2d_input_grad(const Var<T>&, const Var<T>&, ConvGeometry, std::size_t, std::size_t); \
  template Var<T> conv2d_weight_grad(const Var<T>&, const Var<T>&, ConvGeometry, std::size_t, std::size_t); \
  template Var<T> upsample2x(const Var<T>&);                                                          \
  template Var<T> sumpool2x(const Var<T>&);                                                           \
  template Var<T> remap_spatial(const Var<T>&, const std::vector<SpatialMap>&);                       \
  template Var<T> remap_spatial_adjoint(const Var<T>&, const std::vector<SpatialMap>&);

STYLEINV_INSTANTIATE_OPS(float)
STYLEINV_INSTANTIATE_OPS(double)

}  // namespace styleinv
