#include "styleinv/ape.hpp"

#include <cmath>
#include <numbers>

#include "styleinv/errors.hpp"

namespace styleinv {

void ApeConfig::validate() const {
  if (!(anchor_distance > 0) || !std::isfinite(anchor_distance)) throw ConfigError("anchor_distance must be positive");
  if (code_dim == 0 || noise_dim == 0) throw ConfigError("positional encoder dimensions must be positive");
  if (kernel_size < 1) throw ConfigError("kernel_size must be >= 1");
  if (conv_layers < 1) throw ConfigError("conv_layers must be >= 1");
}

double interpolant(double f, double beta) {
  return f + beta * std::sin(2.0 * std::numbers::pi * f) / (2.0 * std::numbers::pi);
}

template <typename T>
PositionalEncoder<T>::PositionalEncoder(const ApeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Initializer init(seed);
  const std::size_t k = cfg_.kernel_size;
  c0_ = params_.add("ape.c0", init.normal<T>(Shape{cfg_.noise_dim}, 1.0));
  for (std::size_t l = 0; l < cfg_.conv_layers; ++l) {
    const std::size_t in = cfg_.noise_dim;
    const std::size_t out = l + 1 == cfg_.conv_layers ? cfg_.code_dim : cfg_.noise_dim;
    const std::string p = "ape.conv" + std::to_string(l);
    if (cfg_.first_frame_aware && k > 1) pads_.push_back(params_.add(p + ".pad", init.normal<T>(Shape{1, in, 1, k - 1}, 1.0)));
    else pads_.emplace_back();
    weights_.push_back(params_.add(p + ".weight", init.normal<T>(Shape{out, in, 1, k}, 1.0)));
    biases_.push_back(params_.add(p + ".bias", Tensor<T>(Shape{out})));
    gains_.push_back(static_cast<T>(1.0 / std::sqrt(static_cast<double>(in * k))));
  }
  s_ = params_.add("ape.interp_s", Tensor<T>(Shape{cfg_.code_dim}));
}

template <typename T>
Tensor<T> PositionalEncoder<T>::anchor_noise(std::uint64_t video_seed, std::int64_t i) const {
  if (cfg_.first_frame_aware) {
    if (i < 0) throw std::out_of_range("anchor index must be >= 0, got " + std::to_string(i));
    if (i == 0) return c0_.value();
  }
  std::vector<double> v(cfg_.noise_dim);
  rng::normal_block(video_seed, rng::Stream::anchor_noise, static_cast<std::uint64_t>(i), v);
  return Tensor<T>(Shape{cfg_.noise_dim}, std::vector<T>(v.begin(), v.end()));
}

template <typename T>
Tensor<T> PositionalEncoder<T>::beta() const {
  Tensor<T> b(Shape{cfg_.code_dim});
  for (std::size_t c = 0; c < b.numel(); ++c) b[c] = T(1) / (T(1) + std::exp(-s_.value()[c]));
  return b;
}

// Layer-0 input for positions [lo, hi] of all videos, [N, noise_dim, 1, len].
// Positions left of the learned padding only feed outputs that are themselves
// replaced by padding, so they are zero.
template <typename T>
Var<T> PositionalEncoder<T>::token_window(const std::vector<std::uint64_t>& seeds, std::int64_t first,
                                          std::int64_t last) const {
  const std::size_t n = seeds.size();
  const auto k = static_cast<std::int64_t>(cfg_.kernel_size);
  const auto layers = static_cast<std::int64_t>(cfg_.conv_layers);
  const bool ffa = cfg_.first_frame_aware;

  // Random-noise columns for positions [a, b] of every video.
  auto noise_columns = [&](std::int64_t a, std::int64_t b) {
    const std::size_t len = static_cast<std::size_t>(b - a + 1), c = cfg_.noise_dim;
    Tensor<T> t(Shape{n, c, 1, len});
    std::vector<double> v(c);
    for (std::size_t s = 0; s < n; ++s)
      for (std::int64_t p = a; p <= b; ++p) {
        rng::normal_block(seeds[s], rng::Stream::anchor_noise, static_cast<std::uint64_t>(p), v);
        for (std::size_t ch = 0; ch < c; ++ch) t[(s * c + ch) * len + static_cast<std::size_t>(p - a)] = static_cast<T>(v[ch]);
      }
    return constant(std::move(t));
  };

  // Left context: learned pads for [-(K-1), -1], zeros further left.
  auto left_context = [&](std::size_t layer, std::int64_t lo, std::size_t channels, std::vector<Var<T>>& parts) {
    if (lo >= 0) return;
    const std::int64_t pad_lo = -(k - 1);
    if (lo < pad_lo)
      parts.push_back(constant(Tensor<T>(Shape{n, channels, 1, static_cast<std::size_t>(pad_lo - lo)})));
    if (k > 1) {
      const std::int64_t from = std::max(lo, pad_lo);
      auto pad = slice(pads_[layer], 3, static_cast<std::size_t>(from - pad_lo), static_cast<std::size_t>(-from));
      parts.push_back(expand(pad, Shape{n, channels, 1, static_cast<std::size_t>(-from)}));
    }
  };

  std::int64_t lo = first - layers * (k - 1);
  Var<T> h;
  {
    std::vector<Var<T>> parts;
    if (!ffa) {
      parts.push_back(noise_columns(lo, last));
    } else {
      left_context(0, lo, cfg_.noise_dim, parts);
      const std::int64_t start = std::max<std::int64_t>(lo, 0);
      if (start <= last) {
        if (start == 0) parts.push_back(expand(reshape(c0_, Shape{1, cfg_.noise_dim, 1, 1}), Shape{n, cfg_.noise_dim, 1, 1}));
        if (std::max<std::int64_t>(start, 1) <= last) parts.push_back(noise_columns(std::max<std::int64_t>(start, 1), last));
      }
    }
    h = parts.size() == 1 ? parts[0] : concat(parts, 3);
  }
  for (std::size_t l = 0; l < cfg_.conv_layers; ++l) {
    auto y = conv2d(h, scale(weights_[l], gains_[l]), ConvGeometry{});
    const std::size_t out = weights_[l].shape()[0];
    y = add(y, expand(reshape(biases_[l], Shape{1, out, 1, 1}), y.shape()));
    lo += k - 1;
    if (l + 1 == cfg_.conv_layers) return y;  // positions [first, last]
    y = leaky_relu(y, T(0.2));
    if (ffa && lo < 0) {
      std::vector<Var<T>> parts;
      left_context(l + 1, lo, out, parts);
      if (last >= 0) parts.push_back(slice(y, 3, static_cast<std::size_t>(-lo), static_cast<std::size_t>(last + 1)));
      y = parts.size() == 1 ? parts[0] : concat(parts, 3);
    }
    h = y;
  }
  return h;
}

template <typename T>
Var<T> PositionalEncoder<T>::tokens(std::uint64_t video_seed, std::int64_t first, std::int64_t last) const {
  if (first < 0 || last < first) throw std::out_of_range("token range must satisfy 0 <= first <= last");
  auto w = token_window({video_seed}, first, last);  // [1, D, 1, L]
  const std::size_t len = static_cast<std::size_t>(last - first + 1);
  // [1, D, 1, L] -> [L, D]
  std::vector<Var<T>> rows;
  for (std::size_t j = 0; j < len; ++j) rows.push_back(reshape(slice(w, 3, j, 1), Shape{1, cfg_.code_dim}));
  return rows.size() == 1 ? rows[0] : concat(rows, 0);
}

template <typename T>
Var<T> PositionalEncoder<T>::encode(const std::vector<std::uint64_t>& seeds,
                                    const std::vector<std::vector<double>>& times) const {
  if (seeds.empty() || seeds.size() != times.size()) throw ShapeError("encode needs one timestamp list per video");
  const std::size_t m = times[0].size();
  std::int64_t first = INT64_MAX, last = INT64_MIN;
  struct Where {
    std::int64_t i;
    double f;
  };
  std::vector<Where> where;
  for (const auto& ts : times) {
    if (ts.size() != m || m == 0) throw ShapeError("every video needs the same, nonzero number of timestamps");
    for (double t : ts) {
      if (!std::isfinite(t) || t < 0) throw std::domain_error("timestamp must be finite and >= 0");
      const double x = t / cfg_.anchor_distance;
      const double fl = std::floor(x);
      const Where w{static_cast<std::int64_t>(fl), x - fl};
      first = std::min(first, w.i);
      last = std::max(last, w.f > 0 ? w.i + 1 : w.i);
      where.push_back(w);
    }
  }
  const auto win = token_window(seeds, first, last);  // [N, D, 1, L]
  const std::size_t d = cfg_.code_dim;
  auto beta = sigmoid(s_);
  std::vector<Var<T>> rows;
  for (std::size_t v = 0; v < seeds.size(); ++v) {
    auto video = slice(win, 0, v, 1);
    for (std::size_t j = 0; j < m; ++j) {
      const Where& w = where[v * m + j];
      auto u = reshape(slice(video, 3, static_cast<std::size_t>(w.i - first), 1), Shape{1, d});
      if (w.f == 0) {
        rows.push_back(u);
        continue;
      }
      auto u_next = reshape(slice(video, 3, static_cast<std::size_t>(w.i + 1 - first), 1), Shape{1, d});
      const double wave = std::sin(2.0 * std::numbers::pi * w.f) / (2.0 * std::numbers::pi);
      auto a = reshape(add_scalar(scale(beta, static_cast<T>(wave)), static_cast<T>(w.f)), Shape{1, d});
      rows.push_back(add(u, mul(a, sub(u_next, u))));
    }
  }
  return rows.size() == 1 ? rows[0] : concat(rows, 0);
}

template class PositionalEncoder<float>;
template class PositionalEncoder<double>;

}  // namespace styleinv
