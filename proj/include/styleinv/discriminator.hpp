#pragma once

#include <cstdint>
#include <vector>

#include "styleinv/nn.hpp"

namespace styleinv {

struct DiscriminatorConfig {
  std::size_t img_resolution = 64;
  std::size_t img_channels = 3;
  std::size_t stem_channels = 16;
  /// Output channels of the stride-2 convolutions, one per halving down to 4x4.
  std::vector<std::size_t> channels = {32, 32, 64, 64};
  std::size_t feature_dim = 64;
  std::size_t delta_dim = 16;
  std::size_t hidden_dim = 128;
  /// Frames per clip: 4 with the first frame, 3 for the plain sparse variant.
  std::size_t num_frames = 4;

  void validate() const;
};

/// Shared per-frame feature extractor: stem conv then stride-2 convs to 4x4,
/// flattened into a feature vector.
template <typename T>
class FrameFeatures {
 public:
  FrameFeatures() = default;
  FrameFeatures(ParameterSet<T>& params, const std::string& prefix, const DiscriminatorConfig& cfg, Initializer& init);
  Var<T> operator()(const Var<T>& frames) const;

 private:
  Conv2dLayer<T> stem_;
  std::vector<Conv2dLayer<T>> downs_;
  FullyConnected<T> fc_;
};

/// Realness logit of a sparse clip conditioned on the time gaps between
/// its frames.
template <typename T>
class VideoDiscriminator {
 public:
  VideoDiscriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  /// frames[f] is [N,C,H,W]; deltas is [N, num_frames-1] of gaps >= 0.
  /// Returns logits [N,1].
  Var<T> operator()(const std::vector<Var<T>>& frames, const Tensor<T>& deltas) const;

  /// MLP embedding of log(1 + delta); x is [M,1] of log(1 + delta) values.
  Var<T> embed_log_delta(const Var<T>& x) const;
  Var<T> embed_delta(T delta) const;

  FullyConnected<T>& head_out() { return out_; }

 private:
  DiscriminatorConfig cfg_;
  ParameterSet<T> params_;
  FrameFeatures<T> phi_;
  FullyConnected<T> delta1_, delta2_, hidden_, out_;
};

/// Single-image discriminator used to pretrain the decoder.
template <typename T>
class ImageDiscriminator {
 public:
  ImageDiscriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  /// images [N,C,H,W] -> logits [N,1].
  Var<T> operator()(const Var<T>& images) const;

 private:
  DiscriminatorConfig cfg_;
  ParameterSet<T> params_;
  FrameFeatures<T> phi_;
  FullyConnected<T> out_;
};

/// (gamma / 2) * sum over the batch of ||d logit / d inputs||^2, averaged
/// over samples. `inputs` must be leaves that require gradients; the result
/// stays differentiable in the discriminator parameters.
template <typename T>
Var<T> r1_penalty(const Var<T>& logits, const std::vector<Var<T>>& inputs, T gamma);

}  // namespace styleinv
