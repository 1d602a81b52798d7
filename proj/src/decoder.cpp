#include "styleinv/decoder.hpp"

#include <bit>

#include "styleinv/errors.hpp"

namespace styleinv {

std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::off: return "off";
    case NoiseMode::constant_per_video: return "constant_per_video";
    case NoiseMode::random: return "random";
  }
  return "?";
}

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "off") return NoiseMode::off;
  if (s == "constant_per_video") return NoiseMode::constant_per_video;
  if (s == "random") return NoiseMode::random;
  throw ConfigError("unknown noise mode '" + s + "'");
}

void DecoderConfig::validate() const {
  if (img_resolution < 8 || !std::has_single_bit(img_resolution))
    throw ConfigError("img_resolution must be a power of two >= 8, got " + std::to_string(img_resolution));
  if (channels.size() != num_blocks())
    throw ConfigError("decoder needs " + std::to_string(num_blocks()) + " channel entries, got " +
                      std::to_string(channels.size()));
  for (auto c : channels)
    if (c == 0) throw ConfigError("decoder channel count must be positive");
  if (z_dim == 0 || w_dim == 0 || img_channels == 0) throw ConfigError("decoder dimensions must be positive");
  if (mapping_layers == 0) throw ConfigError("mapping_layers must be >= 1");
  if (!(mapping_lr_mul > 0)) throw ConfigError("mapping_lr_mul must be positive");
}

std::size_t DecoderConfig::num_blocks() const {
  std::size_t n = 0;
  for (std::size_t r = 4; r <= img_resolution; r *= 2) ++n;
  return n;
}

template <typename T>
Var<T> pixel_norm(const Var<T>& x, T eps) {
  const auto& s = x.shape();
  const Shape row{s[0], 1};
  auto ms = scale(sum_to(square(x), row), T(1) / static_cast<T>(s[1]));
  return mul(x, expand(rsqrt(ms, eps), s));
}

template <typename T>
Decoder<T>::Decoder(const DecoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Initializer init(seed);
  for (std::size_t i = 0; i < cfg_.mapping_layers; ++i) {
    const std::size_t in = i == 0 ? cfg_.z_dim : cfg_.w_dim;
    mapping_.emplace_back(params_, "mapping.fc" + std::to_string(i), in, cfg_.w_dim, init,
                          LayerOptions{.lr_mul = cfg_.mapping_lr_mul});
  }
  const std::size_t blocks = cfg_.num_blocks();
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::string p = block_prefix(b);
    const std::size_t out = cfg_.channels[b];
    const std::size_t in = b == 0 ? out : cfg_.channels[b - 1];
    if (b == 0) const_input_ = params_.add(p + ".const", init.normal<T>(Shape{1, out, 4, 4}, 1.0));
    convs_.emplace_back(params_, p + ".conv", in, out, 3, 1, init);
    affines_.emplace_back(params_, p + ".affine", cfg_.w_dim, 2 * out, init);
    noise_strength_.push_back(params_.add(p + ".noise_strength", Tensor<T>(Shape{1}, T(0))));
  }
  to_rgb_ = Conv2dLayer<T>(params_, block_prefix(blocks - 1) + ".torgb", cfg_.channels.back(), cfg_.img_channels, 1, 1,
                           init);
  w_avg_ = Tensor<T>(Shape{cfg_.w_dim});
}

template <typename T>
std::string Decoder<T>::block_prefix(std::size_t block) const {
  return "synthesis.b" + std::to_string(cfg_.block_resolution(block));
}

template <typename T>
Var<T> Decoder<T>::map_latent(const Var<T>& z, T truncation) const {
  if (z.shape().rank() != 2 || z.shape()[1] != cfg_.z_dim)
    throw ShapeError("map_latent expects z of shape [N," + std::to_string(cfg_.z_dim) + "], got " + z.shape().str());
  if (!(truncation >= T(0) && truncation <= T(1))) throw ConfigError("truncation must lie in [0,1]");
  Var<T> h = pixel_norm(z);
  for (const auto& fc : mapping_) h = lrelu_gain(fc(h));
  if (truncation == T(1)) return h;
  auto avg = expand(constant(w_avg_.reshaped(Shape{1, cfg_.w_dim})), h.shape());
  if (truncation == T(0)) return avg;
  return add(avg, scale(sub(h, avg), truncation));
}

template <typename T>
Var<T> Decoder<T>::map_latent_statistics(const Var<T>& z) {
  Var<T> w = map_latent(z);
  const std::size_t n = w.shape()[0], d = cfg_.w_dim;
  for (std::size_t i = 0; i < n; ++i) {
    ++w_avg_count_;
    const T inv = T(1) / static_cast<T>(w_avg_count_);
    for (std::size_t j = 0; j < d; ++j) w_avg_[j] += (w.value()[i * d + j] - w_avg_[j]) * inv;
  }
  return w;
}

template <typename T>
void Decoder<T>::reset_mean_latent() {
  w_avg_.fill(T(0));
  w_avg_count_ = 0;
}

template <typename T>
void Decoder<T>::set_mean_latent(Tensor<T> w_avg, std::uint64_t count) {
  if (w_avg.shape() != Shape{cfg_.w_dim}) throw ShapeError("mean latent has shape " + w_avg.shape().str());
  w_avg_ = std::move(w_avg);
  w_avg_count_ = count;
}

template <typename T>
std::vector<Tensor<T>> stack_noise(const std::vector<NoiseRealization<T>>& noise, std::size_t sites) {
  std::vector<Tensor<T>> out;
  for (std::size_t s = 0; s < sites; ++s) {
    const std::size_t r2 = noise.front().maps.at(s).numel();
    const std::size_t r = noise.front().maps[s].shape()[2];
    Tensor<T> t(Shape{noise.size(), 1, r, r});
    for (std::size_t n = 0; n < noise.size(); ++n) {
      const auto& m = noise[n].maps.at(s);
      if (m.numel() != r2) throw ShapeError("noise realizations disagree in size");
      std::copy(m.vec().begin(), m.vec().end(), t.vec().begin() + static_cast<std::ptrdiff_t>(n * r2));
    }
    out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
Var<T> Decoder<T>::synthesize(const Var<T>& w, const std::vector<NoiseRealization<T>>* noise) const {
  return synthesize(w, noise, nullptr);
}

template <typename T>
Var<T> Decoder<T>::synthesize(const Var<T>& w, const std::vector<NoiseRealization<T>>* noise,
                              std::vector<Var<T>>* block_outputs) const {
  if (w.shape().rank() != 2 || w.shape()[1] != cfg_.w_dim)
    throw ShapeError("synthesize expects w of shape [N," + std::to_string(cfg_.w_dim) + "], got " + w.shape().str());
  const std::size_t n = w.shape()[0];
  const std::size_t blocks = cfg_.num_blocks();
  std::vector<Tensor<T>> noise_maps;
  if (cfg_.noise_mode != NoiseMode::off) {
    if (noise == nullptr) throw ConfigError("noise realization required under noise mode " + to_string(cfg_.noise_mode));
    if (noise->size() != n)
      throw ShapeError("got " + std::to_string(noise->size()) + " noise realizations for a batch of " + std::to_string(n));
    noise_maps = stack_noise(*noise, blocks);
  }
  Var<T> h = expand(const_input_, Shape{n, cfg_.channels[0], 4, 4});
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t c = cfg_.channels[b];
    if (b > 0) h = upsample2x(h);
    h = convs_[b](h);
    auto style = affines_[b](w);  // [N, 2C]
    auto gamma = add_scalar(slice(style, 1, 0, c), T(1));
    auto beta = slice(style, 1, c, c);
    h = lrelu_gain(channel_affine(h, gamma, beta));
    if (!noise_maps.empty()) {
      const auto& s = h.shape();
      if (noise_maps[b].shape()[2] != s[2]) throw ShapeError("noise map size does not match block resolution");
      auto nz = expand(constant(noise_maps[b]), s);
      h = add(h, mul(nz, expand(reshape(noise_strength_[b], Shape{1, 1, 1, 1}), s)));
    }
    if (block_outputs) block_outputs->push_back(h);
  }
  return to_rgb_(h);
}

template <typename T>
NoiseRealization<T> Decoder<T>::sample_video_noise(std::uint64_t video_seed) const {
  NoiseRealization<T> out;
  for (std::size_t b = 0; b < cfg_.num_blocks(); ++b) {
    const std::size_t r = cfg_.block_resolution(b);
    std::vector<double> v(r * r);
    rng::normal_block(video_seed, rng::Stream::video_noise, b, v);
    out.maps.emplace_back(Shape{1, 1, r, r}, std::vector<T>(v.begin(), v.end()));
  }
  return out;
}

template <typename T>
std::uint64_t Decoder<T>::frame_noise_seed(std::uint64_t video_seed, double t) const {
  if (cfg_.noise_mode == NoiseMode::random)
    return rng::derive_seed(video_seed, 0x6e6f697365ull, std::bit_cast<std::uint64_t>(t + 0.0));
  return video_seed;
}

template <typename T>
std::set<std::string> Decoder<T>::freeze_tier(std::size_t max_resolution) const {
  if (!std::has_single_bit(max_resolution) || max_resolution < 4)
    throw ConfigError("freeze resolution must be a power of two >= 4, got " + std::to_string(max_resolution));
  if (max_resolution >= cfg_.img_resolution)
    throw ConfigError("freeze resolution " + std::to_string(max_resolution) + " leaves nothing trainable at " +
                      std::to_string(cfg_.img_resolution));
  std::set<std::string> out;
  for (const auto& name : params_.names_with_prefix("mapping.")) out.insert(name);
  for (std::size_t b = 0; b < cfg_.num_blocks() && cfg_.block_resolution(b) <= max_resolution; ++b)
    for (const auto& name : params_.names_with_prefix(block_prefix(b) + ".")) out.insert(name);
  return out;
}

template class Decoder<float>;
template class Decoder<double>;
template Var<float> pixel_norm(const Var<float>&, float);
template Var<double> pixel_norm(const Var<double>&, double);
template std::vector<Tensor<float>> stack_noise(const std::vector<NoiseRealization<float>>&, std::size_t);
template std::vector<Tensor<double>> stack_noise(const std::vector<NoiseRealization<double>>&, std::size_t);

}  // namespace styleinv
