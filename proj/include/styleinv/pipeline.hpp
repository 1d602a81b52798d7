#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "styleinv/checkpoint.hpp"
#include "styleinv/config.hpp"
#include "styleinv/decoder.hpp"
#include "styleinv/discriminator.hpp"
#include "styleinv/encoder.hpp"

namespace styleinv {

/// Every network of the pipeline at training precision.
struct Pipeline {
  explicit Pipeline(const PipelineConfig& cfg);

  PipelineConfig cfg;
  Decoder<float> decoder;
  ConvEncoder<float> raw_encoder;
  StyleInV<float> motion;
  VideoDiscriminator<float> video_disc;
  ImageDiscriminator<float> image_disc;

  /// Sections: decoder, raw_encoder, styleinv, video_disc, image_disc.
  CheckpointBundle to_bundle(const std::string& kind) const;
  /// Loads every section present in the bundle; returns the loaded names.
  std::vector<std::string> load(const CheckpointBundle& bundle);
};

void export_decoder(CheckpointBundle& bundle, const Decoder<float>& decoder, const std::string& section = "decoder");
void import_decoder(const CheckpointBundle& bundle, Decoder<float>& decoder, const std::string& section = "decoder");

/// Deep copy of a decoder's parameters and mean latent.
std::unique_ptr<Decoder<float>> clone_decoder(const Decoder<float>& d);

struct GeneratedVideo {
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> latents;
  std::vector<Tensor<float>> frames;  // [3,R,R] each; empty when not rendered
};

struct GenerateOptions {
  std::size_t frames = 16;
  std::size_t fps_multiplier = 1;
  /// Explicit first-frame latent (e.g. from an encoded image); otherwise
  /// sampled from the seed.
  std::optional<std::vector<double>> w0;
  double truncation = 1.0;
  bool render = true;
  std::size_t chunk = 32;
};

/// w0 for a video seed: z from the latent stream, mapped by the decoder.
std::vector<double> sample_w0(const Decoder<float>& decoder, std::uint64_t video_seed, double truncation = 1.0);

/// Frames at t = k / M for k < frames * M.
GeneratedVideo generate_video(const Pipeline& p, std::uint64_t video_seed, const GenerateOptions& opt);
/// Same machinery for an arbitrary list of timestamps. Latents are computed
/// with the pipeline's decoder and rendered with `decoder`, which may be a
/// style-transferred child.
GeneratedVideo generate_at(const Pipeline& p, const Decoder<float>& decoder, std::uint64_t video_seed,
                           const std::vector<double>& w0, const std::vector<double>& times, bool render,
                           std::size_t chunk = 32);

/// Renders latents[k] at times[k] with the video's per-frame noise, `chunk`
/// frames per decoder call.
std::vector<Tensor<float>> render_latents(const Decoder<float>& decoder, const std::vector<std::vector<double>>& latents,
                                          std::uint64_t video_seed, const std::vector<double>& times,
                                          std::size_t chunk = 32);

/// w0 = E(x) + mean latent for a [3,R,R] image.
std::vector<double> invert_image(const Pipeline& p, const Tensor<float>& image);

}  // namespace styleinv
