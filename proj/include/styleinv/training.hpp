#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "styleinv/augment.hpp"
#include "styleinv/config.hpp"
#include "styleinv/pipeline.hpp"

namespace styleinv {

/// mean softplus(fake) + mean softplus(-real).
template <typename T>
Var<T> discriminator_loss(const Var<T>& real_logits, const Var<T>& fake_logits);
/// mean softplus(-fake).
template <typename T>
Var<T> generator_loss(const Var<T>& fake_logits);
/// Mean squared difference over every element.
template <typename T>
Var<T> recon_loss(const Var<T>& a, const Var<T>& b);
/// Sum of squared residual norms per video, averaged over `videos`.
template <typename T>
Var<T> latent_reg(const Var<T>& residuals, std::size_t videos);

/// One fake batch: per video a seed, w0 and timestamps (0, t1, t2, t3).
template <typename T>
struct FakeBatch {
  Var<T> w0;  // [N, w_dim]
  std::vector<std::uint64_t> seeds;
  std::vector<std::array<double, 4>> times;
};

struct ObjectiveOptions {
  double lambda_l2 = 10.0;
  double lambda_reg = 0.05;
  bool use_recon = true;
  bool first_frame_in_d = true;
};

template <typename T>
struct EncoderObjective {
  Var<T> total, loss_g, recon, reg;
  Var<T> residuals;  // [N*4, w_dim], video-major
  /// Clip frames as shown to the discriminator (before augmentation):
  /// G(w0), G(l1), G(l2), G(l3), or only the last three.
  std::vector<Var<T>> clip;
  Tensor<T> deltas;  // [N, clip.size()-1]
};

/// Renders the fake clips and assembles loss_G + l2 * recon + reg_w * reg.
/// `augment` holds one draw per video (empty for none), shared by all frames.
template <typename T>
EncoderObjective<T> encoder_objective(const Decoder<T>& decoder, const StyleInV<T>& motion,
                                      const VideoDiscriminator<T>& disc, const FakeBatch<T>& batch,
                                      const ObjectiveOptions& opt, const std::vector<AugmentParams>& augment);

/// Gaps between consecutive frames of the clip the discriminator sees.
template <typename T>
Tensor<T> clip_deltas(const std::vector<std::array<double, 4>>& times, bool first_frame_in_d);

/// Applies the same augmentation draw to every frame of each clip.
template <typename T>
std::vector<Var<T>> augment_clip(const std::vector<Var<T>>& clip, const std::vector<AugmentParams>& augment);

/// Plain-text metrics: one "step=<k> name=value ..." line per record.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(std::ostream* sink) : sink_(sink) {}

  void record(std::size_t step, const std::vector<std::pair<std::string, double>>& values);
  const std::vector<std::string>& lines() const { return lines_; }
  /// Last recorded value of `name`; NaN if never recorded.
  double last(const std::string& name) const;
  /// Mean of `name` over the last `count` records that carry it.
  double recent_mean(const std::string& name, std::size_t count) const;

 private:
  std::ostream* sink_ = nullptr;
  std::vector<std::string> lines_;
  std::vector<std::vector<std::pair<std::string, double>>> records_;
};

/// Throws NumericError if `v` is not finite.
void require_finite(double v, const std::string& what);

/// Image GAN on class-aware sampled frames (non-saturating loss, lazy R1).
/// Recomputes the decoder's mean latent at the end.
void pretrain_image_gan(Decoder<float>& decoder, ImageDiscriminator<float>& disc, const SyntheticDataset& data,
                        const GanPretrainConfig& cfg, std::uint64_t seed, MetricsLog& log);

/// Minimises ||x - G(E(x) + w_avg)||^2 with the decoder frozen and the
/// noise inputs zeroed.
void pretrain_inversion(Decoder<float>& decoder, ConvEncoder<float>& encoder, const SyntheticDataset& data,
                        const InversionPretrainConfig& cfg, std::uint64_t seed, MetricsLog& log);

/// Reconstruction error ||G(w0) - G(w0 + E(G(w0), s_0))||^2 per pixel for one
/// video, with the first frame rendered from noise_seed and the motion code
/// drawn from motion_seed.
double first_frame_error(const Decoder<float>& decoder, const StyleInV<float>& motion, const std::vector<double>& w0,
                         std::uint64_t noise_seed, std::uint64_t motion_seed);

/// Sparse first-frame-aware training of the motion generator against the
/// video discriminator; the decoder stays frozen. `on_step` runs after every
/// step (checkpointing).
void train_styleinv(Pipeline& p, const SyntheticDataset& data, MetricsLog& log,
                    const std::function<void(std::size_t)>& on_step = {});

}  // namespace styleinv
