#pragma once

#include <cstdint>
#include <vector>

#include "styleinv/nn.hpp"

namespace styleinv {

/// Gaussian fit of feature rows.
struct GaussianStats {
  std::vector<double> mean;
  std::vector<double> cov;  // row-major d x d
  std::size_t dim() const { return mean.size(); }
};

/// features: one row of length dim per sample (at least two rows).
GaussianStats fit_gaussian(const std::vector<std::vector<double>>& features);

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)). The square root is taken
/// as sqrt(S1)^(1/2) S2 sqrt(S1)^(1/2) by symmetric eigendecomposition with
/// negative eigenvalues clamped to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

/// Fixed, seeded random conv net mapping [3,H,W] frames to 64 features.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(std::uint64_t seed = 20240613, std::size_t in_channels = 3);
  static constexpr std::size_t kDim = 64;

  /// frames [N,C,H,W] -> one feature row per frame.
  std::vector<std::vector<double>> features(const Tensor<float>& frames) const;
  std::vector<double> features_one(const Tensor<float>& frame) const;

 private:
  ParameterSet<float> params_;
  std::vector<Conv2dLayer<float>> convs_;
  Var<float> projection_;
};

/// A clip is a list of [3,H,W] frames.
using Clip = std::vector<Tensor<float>>;

double fid_proxy(const FeatureExtractor& fx, const std::vector<Tensor<float>>& a, const std::vector<Tensor<float>>& b);

/// Clip feature: mean frame feature over the first clip_len frames,
/// concatenated with the mean consecutive-frame feature difference.
std::vector<double> clip_feature(const FeatureExtractor& fx, const Clip& clip, std::size_t clip_len);
double fvd_proxy(const FeatureExtractor& fx, const std::vector<Clip>& a, const std::vector<Clip>& b, std::size_t clip_len);

/// Feature distance between the first and last frame.
double identity_drift(const FeatureExtractor& fx, const Clip& clip);

/// ||w1 - w0|| / median_t ||w_{t+1} - w_t||; 0 when both are 0.
double latent_jump(const std::vector<std::vector<double>>& latents);

}  // namespace styleinv
