#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "styleinv/ape.hpp"
#include "styleinv/decoder.hpp"
#include "styleinv/temporal_style.hpp"

namespace styleinv {

struct EncoderConfig {
  std::size_t img_resolution = 64;
  std::size_t img_channels = 3;
  std::size_t w_dim = 64;
  std::size_t stem_channels = 16;
  /// Output channels of each stride-2 residual block.
  std::vector<std::size_t> channels = {16, 32, 32, 64};

  void validate() const;
};

/// Per-sample instance statistics, eps inside the square root.
template <typename T>
Var<T> instance_normalize(const Var<T>& h, T eps = T(1e-5));

/// (h + gamma * norm(h) + beta) / sqrt(2) with gamma, beta [N,C].
template <typename T>
Var<T> modulated_residual(const Var<T>& h, const Var<T>& gamma, const Var<T>& beta);

/// Residual conv encoder image -> latent residual. Each stride-2
/// pre-activation residual block is followed by a modulation site; without
/// styles the sites run with gamma = 1, beta = 0.
template <typename T>
class ConvEncoder {
 public:
  /// zero_head: final projection starts at zero (residual starts at w0).
  ConvEncoder(const EncoderConfig& cfg, std::uint64_t seed, bool zero_head);

  const EncoderConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  std::size_t num_sites() const { return cfg_.channels.size(); }
  const std::vector<std::size_t>& site_channels() const { return cfg_.channels; }

  /// Pooled features [N*repeats, C_last]. The frame batch [N,...] is shared
  /// across `repeats` styles: row n*repeats + j of every gamma/beta belongs
  /// to frame n. head == nullptr means identity modulation.
  Var<T> features(const Var<T>& frames, const StyleHead<T>* head, const Var<T>& styles, std::size_t repeats) const;
  Var<T> features(const Var<T>& frames) const { return features(frames, nullptr, Var<T>(), 1); }

  Var<T> project(const Var<T>& features) const { return fc_(features); }
  Var<T> forward(const Var<T>& frames) const { return project(features(frames)); }

  /// Names of the convolution tensors (stem, block convs, shortcuts).
  std::vector<std::string> conv_parameter_names() const;

  /// Copies every convolution tensor from `source`; throws ShapeError
  /// listing each missing or mis-shaped tensor.
  void init_from_inversion(const ConvEncoder& source);

  FullyConnected<T>& head() { return fc_; }

 private:
  struct Block {
    Conv2dLayer<T> conv1, conv2, shortcut;
  };

  EncoderConfig cfg_;
  ParameterSet<T> params_;
  Conv2dLayer<T> stem_;
  std::vector<Block> blocks_;
  FullyConnected<T> fc_;
};

struct StyleInVConfig {
  ApeConfig ape;
  EncoderConfig encoder;
  std::size_t style_hidden = 64;
  std::size_t style_dim = 64;
  /// Render the first frame fed to the encoder with the video's noise.
  bool render_with_noise = true;
};

/// The motion generator: positional encoder, style head and modulated encoder
/// acting on the rendered first frame.
template <typename T>
class StyleInV {
 public:
  using Config = StyleInVConfig;

  StyleInV(const Config& cfg, std::size_t w_dim, std::uint64_t seed);

  const Config& config() const { return cfg_; }
  PositionalEncoder<T>& ape() { return ape_; }
  const PositionalEncoder<T>& ape() const { return ape_; }
  StyleHead<T>& style_head() { return head_; }
  const StyleHead<T>& style_head() const { return head_; }
  ConvEncoder<T>& encoder() { return encoder_; }
  const ConvEncoder<T>& encoder() const { return encoder_; }

  /// All trainable tensors of the three parts, in a stable order.
  std::vector<std::pair<std::string, Var<T>>> parameters() const;

  /// Residuals E(frame_n, s_{n,j}) for frames [N,...], w0 [N,w_dim] and
  /// times[n] (equal length m). Result [N*m, w_dim], video-major.
  Var<T> residuals(const Var<T>& first_frames, const Var<T>& w0, const std::vector<std::uint64_t>& seeds,
                   const std::vector<std::vector<double>>& times) const;

  /// Latents w0 + residual, [N*m, w_dim]; renders the first frames with `decoder`.
  Var<T> latents(const Decoder<T>& decoder, const Var<T>& w0, const std::vector<std::uint64_t>& seeds,
                 const std::vector<std::vector<double>>& times) const;

  /// First frame as fed to the encoder.
  Var<T> first_frames(const Decoder<T>& decoder, const Var<T>& w0, const std::vector<std::uint64_t>& seeds) const;

 private:
  Config cfg_;
  PositionalEncoder<T> ape_;
  StyleHead<T> head_;
  ConvEncoder<T> encoder_;
};

/// Repeats each row of a [N,D] matrix m times: row n*m + j = row n.
template <typename T>
Var<T> repeat_rows(const Var<T>& x, std::size_t m);

}  // namespace styleinv
