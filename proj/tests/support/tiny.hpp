#pragma once

// Small 8x8, 2-channel configurations for gradient and wiring tests.

#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "styleinv/config.hpp"
#include "styleinv/decoder.hpp"
#include "styleinv/discriminator.hpp"
#include "styleinv/encoder.hpp"
#include "styleinv/nn.hpp"

namespace styleinv::testing {

inline DecoderConfig tiny_decoder(NoiseMode mode = NoiseMode::constant_per_video) {
  DecoderConfig c;
  c.z_dim = 4;
  c.w_dim = 4;
  c.img_resolution = 8;
  c.img_channels = 2;
  c.channels = {3, 3};
  c.mapping_layers = 2;
  c.mapping_lr_mul = 0.5;
  c.noise_mode = mode;
  return c;
}

inline ApeConfig tiny_ape() {
  ApeConfig c;
  c.anchor_distance = 4.0;
  c.code_dim = 3;
  c.noise_dim = 3;
  c.kernel_size = 3;
  c.conv_layers = 2;
  return c;
}

inline EncoderConfig tiny_encoder() {
  EncoderConfig c;
  c.img_resolution = 8;
  c.img_channels = 2;
  c.w_dim = 4;
  c.stem_channels = 3;
  c.channels = {3, 4};
  return c;
}

inline StyleInVConfig tiny_styleinv() {
  StyleInVConfig c;
  c.ape = tiny_ape();
  c.encoder = tiny_encoder();
  c.style_hidden = 5;
  c.style_dim = 4;
  return c;
}

inline DiscriminatorConfig tiny_disc(std::size_t frames = 4) {
  DiscriminatorConfig c;
  c.img_resolution = 8;
  c.img_channels = 2;
  c.stem_channels = 3;
  c.channels = {3};
  c.feature_dim = 4;
  c.delta_dim = 2;
  c.hidden_dim = 5;
  c.num_frames = frames;
  return c;
}

/// Whole-pipeline configuration at 8x8 with a handful of short videos.
inline const char* kTinyPipelineText = R"(
seed = 3
data.num_videos = 4
data.length = 24
data.seed = 5
decoder.img_resolution = 8
decoder.z_dim = 8
decoder.w_dim = 8
decoder.channels = 8,8
decoder.mapping_layers = 2
ape.anchor_distance = 4
ape.code_dim = 4
ape.noise_dim = 4
ape.kernel_size = 3
style.dim = 6
style.hidden_dim = 6
encoder.stem_channels = 4
encoder.channels = 6,8
disc.stem_channels = 4
disc.channels = 6
disc.feature_dim = 8
disc.delta_dim = 4
disc.hidden_dim = 8
gan.steps = 3
gan.batch = 4
gan.mean_latent_samples = 64
inversion.steps = 3
inversion.batch = 4
train.steps = 2
train.batch = 2
train.max_t = 12
transfer.steps = 2
transfer.batch = 2
transfer.freeze_resolution = 4
eval.num_clips = 2
eval.num_frames = 16
)";

/// `extra` holds key = value lines that replace the matching base lines.
inline PipelineConfig tiny_pipeline(const std::string& extra = "") {
  std::istringstream base(kTinyPipelineText), over(extra);
  std::set<std::string> keys;
  std::string line, text;
  auto key_of = [](const std::string& l) { return l.substr(0, l.find(" =")); };
  while (std::getline(over, line))
    if (!line.empty()) keys.insert(key_of(line));
  while (std::getline(base, line))
    if (!keys.contains(key_of(line))) text += line + "\n";
  return parse_config(text + extra, "tiny");
}

/// Overwrites every parameter with N(0, stddev^2) draws so that no path is
/// silenced by zero initialisation.
template <typename T>
void randomize(ParameterSet<T>& params, std::uint64_t seed, double stddev = 0.5) {
  Initializer init(seed);
  for (const auto& [name, v] : params.entries()) {
    Var<T> h = v;
    h.mutable_value() = init.normal<T>(v.shape(), stddev);
  }
}

template <typename T>
Var<T> random_input(Shape s, std::uint64_t seed, double stddev = 1.0) {
  Initializer init(seed);
  return constant(init.normal<T>(std::move(s), stddev));
}

/// Snapshot of every tensor value, for bitwise before/after comparisons.
template <typename T>
std::vector<Tensor<T>> snapshot(const ParameterSet<T>& params) {
  std::vector<Tensor<T>> out;
  for (const auto& [name, v] : params.entries()) out.push_back(v.value());
  return out;
}

}  // namespace styleinv::testing
