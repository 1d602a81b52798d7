#include "styleinv/encoder.hpp"

#include <cmath>

#include "styleinv/errors.hpp"

namespace styleinv {

void EncoderConfig::validate() const {
  if (channels.empty()) throw ConfigError("encoder needs at least one block");
  if ((img_resolution >> channels.size()) < 1) throw ConfigError("encoder has more blocks than the image can downsample");
  if (img_channels == 0 || w_dim == 0 || stem_channels == 0) throw ConfigError("encoder dimensions must be positive");
}

template <typename T>
Var<T> instance_normalize(const Var<T>& h, T eps) {
  const auto& s = h.shape();
  const Shape stat{s[0], s[1], 1, 1};
  const T inv = T(1) / static_cast<T>(s[2] * s[3]);
  auto mu = scale(sum_to(h, stat), inv);
  auto centered = sub(h, expand(mu, s));
  auto var = scale(sum_to(square(centered), stat), inv);
  return mul(centered, expand(rsqrt(var, eps), s));
}

template <typename T>
Var<T> modulated_residual(const Var<T>& h, const Var<T>& gamma, const Var<T>& beta) {
  return scale(add(h, channel_affine(instance_normalize(h), gamma, beta)), static_cast<T>(1.0 / std::sqrt(2.0)));
}

template <typename T>
Var<T> repeat_rows(const Var<T>& x, std::size_t m) {
  if (m == 1) return x;
  const auto& s = x.shape();
  const std::size_t n = s[0], rest = x.numel() / n;
  auto dims = s.dims();
  dims[0] = n * m;
  return reshape(expand(reshape(x, Shape{n, 1, rest}), Shape{n, m, rest}), Shape(dims));
}

template <typename T>
ConvEncoder<T>::ConvEncoder(const EncoderConfig& cfg, std::uint64_t seed, bool zero_head) : cfg_(cfg) {
  cfg_.validate();
  Initializer init(seed);
  stem_ = Conv2dLayer<T>(params_, "encoder.stem", cfg_.img_channels, cfg_.stem_channels, 3, 1, init);
  std::size_t in = cfg_.stem_channels;
  for (std::size_t b = 0; b < cfg_.channels.size(); ++b) {
    const std::size_t out = cfg_.channels[b];
    const std::string p = "encoder.block" + std::to_string(b);
    Block blk;
    blk.conv1 = Conv2dLayer<T>(params_, p + ".conv1", in, out, 3, 2, init);
    blk.conv2 = Conv2dLayer<T>(params_, p + ".conv2", out, out, 3, 1, init);
    blk.shortcut = Conv2dLayer<T>(params_, p + ".shortcut", in, out, 1, 1, init, LayerOptions{.bias = false});
    blocks_.push_back(std::move(blk));
    in = out;
  }
  fc_ = FullyConnected<T>(params_, "encoder.head", in, cfg_.w_dim, init, LayerOptions{.init_std = zero_head ? 0.0 : 1.0});
}

template <typename T>
Var<T> ConvEncoder<T>::features(const Var<T>& frames, const StyleHead<T>* head, const Var<T>& styles,
                                std::size_t repeats) const {
  const auto& s = frames.shape();
  if (s.rank() != 4 || s[1] != cfg_.img_channels || s[2] != cfg_.img_resolution || s[3] != cfg_.img_resolution)
    throw ShapeError("encoder expects frames [N," + std::to_string(cfg_.img_channels) + "," +
                     std::to_string(cfg_.img_resolution) + "," + std::to_string(cfg_.img_resolution) + "], got " +
                     s.str());
  if (head && head->num_sites() != blocks_.size()) throw ShapeError("style head has the wrong number of sites");
  const T inv_sqrt2 = static_cast<T>(1.0 / std::sqrt(2.0));
  Var<T> h = stem_(frames);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    auto res = blk.conv2(leaky_relu(blk.conv1(leaky_relu(h, T(0.2))), T(0.2)));
    auto sc = blk.shortcut(scale(sumpool2x(h), T(0.25)));
    h = scale(add(sc, res), inv_sqrt2);
    if (b == 0) h = repeat_rows(h, repeats);
    const std::size_t rows = h.shape()[0], c = h.shape()[1];
    Var<T> gamma, beta;
    if (head) {
      std::tie(gamma, beta) = head->site_params(styles, b);
    } else {
      gamma = constant(Tensor<T>(Shape{rows, c}, T(1)));
      beta = constant(Tensor<T>(Shape{rows, c}, T(0)));
    }
    h = modulated_residual(h, gamma, beta);
  }
  return spatial_mean(leaky_relu(h, T(0.2)));
}

template <typename T>
std::vector<std::string> ConvEncoder<T>::conv_parameter_names() const {
  std::vector<std::string> out;
  for (const auto& n : params_.names())
    if (!n.starts_with("encoder.head")) out.push_back(n);
  return out;
}

template <typename T>
void ConvEncoder<T>::init_from_inversion(const ConvEncoder& source) {
  params_.copy_values_from(source.params_, conv_parameter_names());
}

template <typename T>
StyleInV<T>::StyleInV(const Config& cfg, std::size_t w_dim, std::uint64_t seed)
    : cfg_(cfg),
      ape_(cfg.ape, rng::derive_seed(seed, 1)),
      head_(StyleHeadConfig{cfg.ape.code_dim, w_dim, cfg.style_hidden, cfg.style_dim, cfg.encoder.channels},
            rng::derive_seed(seed, 2)),
      encoder_(cfg.encoder, rng::derive_seed(seed, 3), true) {
  if (cfg.encoder.w_dim != w_dim) throw ConfigError("encoder w_dim does not match the decoder");
}

template <typename T>
std::vector<std::pair<std::string, Var<T>>> StyleInV<T>::parameters() const {
  std::vector<std::pair<std::string, Var<T>>> out;
  for (const auto* ps : {&ape_.params(), &head_.params(), &encoder_.params()})
    for (const auto& e : ps->entries()) out.push_back(e);
  return out;
}

template <typename T>
Var<T> StyleInV<T>::residuals(const Var<T>& first_frames, const Var<T>& w0, const std::vector<std::uint64_t>& seeds,
                              const std::vector<std::vector<double>>& times) const {
  const std::size_t n = w0.shape()[0];
  if (seeds.size() != n || times.size() != n || first_frames.shape()[0] != n)
    throw ShapeError("residuals: batch sizes of frames, latents, seeds and times differ");
  const std::size_t m = times[0].size();
  auto v = ape_.encode(seeds, times);
  auto s = head_.fuse(v, repeat_rows(w0, m));
  auto feats = encoder_.features(first_frames, &head_, s, m);
  return encoder_.project(feats);
}

template <typename T>
Var<T> StyleInV<T>::first_frames(const Decoder<T>& decoder, const Var<T>& w0,
                                 const std::vector<std::uint64_t>& seeds) const {
  if (decoder.config().noise_mode == NoiseMode::off) return decoder.synthesize(w0, nullptr);
  std::vector<NoiseRealization<T>> noise;
  for (auto seed : seeds) {
    auto nz = decoder.sample_video_noise(decoder.frame_noise_seed(seed, 0.0));
    if (!cfg_.render_with_noise)
      for (auto& m : nz.maps) m.fill(T(0));
    noise.push_back(std::move(nz));
  }
  return decoder.synthesize(w0, &noise);
}

template <typename T>
Var<T> StyleInV<T>::latents(const Decoder<T>& decoder, const Var<T>& w0, const std::vector<std::uint64_t>& seeds,
                            const std::vector<std::vector<double>>& times) const {
  const std::size_t m = times.at(0).size();
  auto frames = first_frames(decoder, w0, seeds);
  return add(repeat_rows(w0, m), residuals(frames, w0, seeds, times));
}

template Var<float> instance_normalize(const Var<float>&, float);
template Var<double> instance_normalize(const Var<double>&, double);
template Var<float> modulated_residual(const Var<float>&, const Var<float>&, const Var<float>&);
template Var<double> modulated_residual(const Var<double>&, const Var<double>&, const Var<double>&);
template Var<float> repeat_rows(const Var<float>&, std::size_t);
template Var<double> repeat_rows(const Var<double>&, std::size_t);
template class ConvEncoder<float>;
template class ConvEncoder<double>;
template class StyleInV<float>;
template class StyleInV<double>;

}  // namespace styleinv
