#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "styleinv/config.hpp"
#include "styleinv/pipeline.hpp"
#include "styleinv/training.hpp"

namespace styleinv {

/// Fine-tunes a copy of `parent` on `targets` ([3,R,R] images) with the
/// mapping network and every synthesis block at resolution <= freeze_resolution
/// frozen. Losses: non-saturating adversarial against a discriminator
/// initialised from `disc_init`, plus feature (perceptual) and cosine
/// (identity) distances between parent and child renders of the same w under
/// the fixed `feature_net`.
std::unique_ptr<Decoder<float>> finetune_decoder(const Decoder<float>& parent, const ConvEncoder<float>& feature_net,
                                                 const ImageDiscriminator<float>& disc_init,
                                                 const std::vector<Tensor<float>>& targets, const TransferConfig& cfg,
                                                 std::uint64_t seed, MetricsLog& log);

/// Decodes a latent sequence with `decoder`, reusing the video's noise.
std::vector<Tensor<float>> transfer_video(const Decoder<float>& decoder, const std::vector<std::vector<double>>& latents,
                                          std::uint64_t video_seed, const std::vector<double>& times);

}  // namespace styleinv
