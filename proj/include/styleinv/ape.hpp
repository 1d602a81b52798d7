#pragma once

// First-frame-aware acyclic positional encoding. Anchor noise vectors sit at
// t = i * anchor_distance; a stack of causal 1D convolutions with learned
// left padding turns them into tokens, and tokens are interpolated between
// neighbouring anchors. Anchor 0 is a learned constant, so the code at t = 0
// never depends on the video seed.

#include <cstdint>
#include <vector>

#include "styleinv/nn.hpp"

namespace styleinv {

struct ApeConfig {
  double anchor_distance = 32.0;
  std::size_t code_dim = 64;
  /// Width of the anchor noise and of the hidden conv layers.
  std::size_t noise_dim = 64;
  std::size_t kernel_size = 6;
  std::size_t conv_layers = 2;
  /// false reproduces the cyclic-free but seed-dependent variant: every
  /// anchor, including index 0 and the left context, is random noise.
  bool first_frame_aware = true;

  void validate() const;
  std::size_t pad_len() const { return kernel_size - 1; }
  std::size_t receptive_field() const { return conv_layers * (kernel_size - 1) + 1; }
};

/// a(f) = f + beta * sin(2 pi f) / (2 pi); exact at f = 0 and f = 1.
double interpolant(double f, double beta);

template <typename T>
class PositionalEncoder {
 public:
  PositionalEncoder(const ApeConfig& cfg, std::uint64_t seed);

  const ApeConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  /// Anchor noise z_i [noise_dim]; i = 0 yields the learned constant.
  Tensor<T> anchor_noise(std::uint64_t video_seed, std::int64_t i) const;

  /// Tokens u_first..u_last for one video, shape [last-first+1, code_dim].
  Var<T> tokens(std::uint64_t video_seed, std::int64_t first, std::int64_t last) const;
  Var<T> token(std::uint64_t video_seed, std::int64_t i) const { return tokens(video_seed, i, i); }

  /// Motion codes for every (video_seed, t) pair: rows ordered video-major,
  /// result [seeds.size() * times.size(), code_dim]. times[v] lists the
  /// timestamps of video v; every list must have the same length.
  Var<T> encode(const std::vector<std::uint64_t>& seeds, const std::vector<std::vector<double>>& times) const;
  Var<T> encode(std::uint64_t video_seed, double t) const { return encode({video_seed}, {{t}}); }

  /// logistic(s), per channel.
  Tensor<T> beta() const;

 private:
  Var<T> token_window(const std::vector<std::uint64_t>& seeds, std::int64_t first, std::int64_t last) const;
  Var<T> input_column(std::uint64_t video_seed, std::int64_t position) const;

  ApeConfig cfg_;
  ParameterSet<T> params_;
  Var<T> c0_;
  std::vector<Var<T>> pads_;     // per layer [1, in, 1, pad_len]
  std::vector<Var<T>> weights_;  // per layer [out, in, 1, K]
  std::vector<Var<T>> biases_;   // per layer [out]
  std::vector<T> gains_;
  Var<T> s_;                     // interpolation sharpness, [code_dim]
};

}  // namespace styleinv
