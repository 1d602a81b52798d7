#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "styleinv/nn.hpp"

namespace styleinv {

enum class NoiseMode { off, constant_per_video, random };

std::string to_string(NoiseMode m);
NoiseMode noise_mode_from_string(const std::string& s);

struct DecoderConfig {
  std::size_t z_dim = 64;
  std::size_t w_dim = 64;
  std::size_t img_resolution = 64;
  std::size_t img_channels = 3;
  /// Channel count per synthesis block, ordered 4, 8, ..., img_resolution.
  std::vector<std::size_t> channels = {64, 64, 32, 16, 8};
  std::size_t mapping_layers = 4;
  double mapping_lr_mul = 0.01;
  NoiseMode noise_mode = NoiseMode::constant_per_video;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  std::size_t num_blocks() const;
  std::size_t block_resolution(std::size_t block) const { return std::size_t{4} << block; }
};

/// One [1,1,r,r] map per synthesis block, ordered by block.
template <typename T>
struct NoiseRealization {
  std::vector<Tensor<T>> maps;
};

/// Style-based generator: mapping network z -> w and a synthesis network
/// that starts from a learned 4x4 constant and doubles resolution per block.
template <typename T>
class Decoder {
 public:
  Decoder(const DecoderConfig& cfg, std::uint64_t seed);

  const DecoderConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  /// z [N,z_dim] -> w [N,w_dim]. truncation in [0,1]; 1 leaves w untouched.
  Var<T> map_latent(const Var<T>& z, T truncation = T(1)) const;
  /// Maps z and folds every output into the running mean latent.
  Var<T> map_latent_statistics(const Var<T>& z);
  void reset_mean_latent();
  const Tensor<T>& mean_latent() const { return w_avg_; }
  std::uint64_t mean_latent_count() const { return w_avg_count_; }
  void set_mean_latent(Tensor<T> w_avg, std::uint64_t count);

  /// w [N,w_dim] -> images [N,C,R,R]. `noise` holds one realization per
  /// sample; it is ignored when noise is off and required otherwise.
  Var<T> synthesize(const Var<T>& w, const std::vector<NoiseRealization<T>>* noise) const;
  /// Same, also returning the activation after every block (input to toRGB last).
  Var<T> synthesize(const Var<T>& w, const std::vector<NoiseRealization<T>>* noise,
                    std::vector<Var<T>>* block_outputs) const;

  /// Deterministic in video_seed; one map per block site.
  NoiseRealization<T> sample_video_noise(std::uint64_t video_seed) const;
  /// Seed for the noise of the frame at time t: the video seed itself under
  /// constant_per_video, a per-timestamp derivation under random.
  std::uint64_t frame_noise_seed(std::uint64_t video_seed, double t) const;

  /// Names of the mapping network plus every synthesis block at resolution
  /// <= max_resolution.
  std::set<std::string> freeze_tier(std::size_t max_resolution) const;

  std::string block_prefix(std::size_t block) const;

 private:
  DecoderConfig cfg_;
  ParameterSet<T> params_;
  std::vector<FullyConnected<T>> mapping_;
  Var<T> const_input_;
  std::vector<Conv2dLayer<T>> convs_;
  std::vector<FullyConnected<T>> affines_;
  std::vector<Var<T>> noise_strength_;
  Conv2dLayer<T> to_rgb_;
  Tensor<T> w_avg_;
  std::uint64_t w_avg_count_ = 0;
};

/// Stacks per-sample realizations into one [N,1,r,r] tensor per site.
template <typename T>
std::vector<Tensor<T>> stack_noise(const std::vector<NoiseRealization<T>>& noise, std::size_t sites);

/// Pixel norm: x / sqrt(mean(x^2) + eps) per row of a [N,D] matrix.
template <typename T>
Var<T> pixel_norm(const Var<T>& x, T eps = T(1e-8));

}  // namespace styleinv
