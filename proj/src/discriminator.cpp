#include "styleinv/discriminator.hpp"

#include <bit>
#include <cmath>

#include "styleinv/errors.hpp"

namespace styleinv {

void DiscriminatorConfig::validate() const {
  if (!std::has_single_bit(img_resolution) || img_resolution < 8)
    throw ConfigError("discriminator resolution must be a power of two >= 8");
  if ((img_resolution >> channels.size()) != 4)
    throw ConfigError("discriminator needs one stride-2 stage per halving down to 4x4 (" +
                      std::to_string(std::countr_zero(img_resolution) - 2) + " for " + std::to_string(img_resolution) +
                      "), got " + std::to_string(channels.size()));
  if (num_frames < 2) throw ConfigError("video discriminator needs at least two frames");
}

template <typename T>
FrameFeatures<T>::FrameFeatures(ParameterSet<T>& params, const std::string& prefix, const DiscriminatorConfig& cfg,
                                Initializer& init) {
  stem_ = Conv2dLayer<T>(params, prefix + ".stem", cfg.img_channels, cfg.stem_channels, 3, 1, init);
  std::size_t in = cfg.stem_channels;
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    downs_.emplace_back(params, prefix + ".down" + std::to_string(i), in, cfg.channels[i], 3, 2, init);
    in = cfg.channels[i];
  }
  fc_ = FullyConnected<T>(params, prefix + ".fc", in * 16, cfg.feature_dim, init);
}

template <typename T>
Var<T> FrameFeatures<T>::operator()(const Var<T>& frames) const {
  Var<T> h = lrelu_gain(stem_(frames));
  for (const auto& d : downs_) h = lrelu_gain(d(h));
  const std::size_t n = h.shape()[0];
  return lrelu_gain(fc_(reshape(h, Shape{n, h.numel() / n})));
}

template <typename T>
VideoDiscriminator<T>::VideoDiscriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Initializer init(seed);
  phi_ = FrameFeatures<T>(params_, "disc.phi", cfg_, init);
  delta1_ = FullyConnected<T>(params_, "disc.delta1", 1, cfg_.delta_dim, init);
  delta2_ = FullyConnected<T>(params_, "disc.delta2", cfg_.delta_dim, cfg_.delta_dim, init);
  const std::size_t in = cfg_.num_frames * cfg_.feature_dim + (cfg_.num_frames - 1) * cfg_.delta_dim;
  hidden_ = FullyConnected<T>(params_, "disc.hidden", in, cfg_.hidden_dim, init);
  out_ = FullyConnected<T>(params_, "disc.out", cfg_.hidden_dim, 1, init);
}

template <typename T>
Var<T> VideoDiscriminator<T>::embed_log_delta(const Var<T>& x) const {
  return lrelu_gain(delta2_(lrelu_gain(delta1_(x))));
}

template <typename T>
Var<T> VideoDiscriminator<T>::embed_delta(T delta) const {
  if (!(delta >= T(0)) || !std::isfinite(delta)) throw std::domain_error("time delta must be finite and >= 0");
  return embed_log_delta(constant(Tensor<T>(Shape{1, 1}, std::log1p(delta))));
}

template <typename T>
Var<T> VideoDiscriminator<T>::operator()(const std::vector<Var<T>>& frames, const Tensor<T>& deltas) const {
  const std::size_t f = cfg_.num_frames;
  if (frames.size() != f)
    throw ShapeError("video discriminator expects " + std::to_string(f) + " frames, got " + std::to_string(frames.size()));
  const std::size_t n = frames[0].shape()[0];
  for (const auto& fr : frames)
    if (fr.shape() != frames[0].shape()) throw ShapeError("clip frames differ in shape");
  if (deltas.shape() != Shape{n, f - 1})
    throw ShapeError("deltas must be [" + std::to_string(n) + "," + std::to_string(f - 1) + "], got " + deltas.shape().str());
  Tensor<T> logd(Shape{n * (f - 1), 1});
  for (std::size_t i = 0; i < deltas.numel(); ++i) {
    if (!(deltas[i] >= T(0)) || !std::isfinite(deltas[i])) throw std::domain_error("time delta must be finite and >= 0");
    logd[i] = std::log1p(deltas[i]);
  }
  const std::size_t ed = cfg_.delta_dim;
  // all frames through the shared extractor in one batch, frame-major rows
  auto feats = phi_(concat(frames, 0));
  auto emb = reshape(embed_log_delta(constant(std::move(logd))), Shape{n, (f - 1) * ed});
  std::vector<Var<T>> parts;
  for (std::size_t i = 0; i < f; ++i) parts.push_back(slice(feats, 0, i * n, n));
  parts.push_back(emb);
  return out_(lrelu_gain(hidden_(concat(parts, 1))));
}

template <typename T>
ImageDiscriminator<T>::ImageDiscriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Initializer init(seed);
  phi_ = FrameFeatures<T>(params_, "imgdisc.phi", cfg_, init);
  out_ = FullyConnected<T>(params_, "imgdisc.out", cfg_.feature_dim, 1, init);
}

template <typename T>
Var<T> ImageDiscriminator<T>::operator()(const Var<T>& images) const {
  return out_(phi_(images));
}

template <typename T>
Var<T> r1_penalty(const Var<T>& logits, const std::vector<Var<T>>& inputs, T gamma) {
  for (const auto& x : inputs)
    if (!x.requires_grad()) throw std::logic_error("r1_penalty: inputs must require gradients");
  if (gamma == T(0)) return constant(Tensor<T>(Shape{1}));
  const auto grads = grad(sum(logits), inputs, true);
  Var<T> total;
  for (const auto& g : grads) {
    if (!g.defined()) continue;
    auto sq = sum(square(g));
    total = total.defined() ? add(total, sq) : sq;
  }
  if (!total.defined()) return constant(Tensor<T>(Shape{1}));
  const T n = static_cast<T>(logits.shape()[0]);
  return scale(total, gamma / (T(2) * n));
}

template class FrameFeatures<float>;
template class FrameFeatures<double>;
template class VideoDiscriminator<float>;
template class VideoDiscriminator<double>;
template class ImageDiscriminator<float>;
template class ImageDiscriminator<double>;
template Var<float> r1_penalty(const Var<float>&, const std::vector<Var<float>>&, float);
template Var<double> r1_penalty(const Var<double>&, const std::vector<Var<double>>&, double);

}  // namespace styleinv
