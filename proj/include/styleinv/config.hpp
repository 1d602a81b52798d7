#pragma once

// Flat key = value configuration covering every stage of the pipeline.
// Lines starting with '#' and blank lines are ignored; unknown keys and
// malformed values raise ConfigError.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "styleinv/decoder.hpp"
#include "styleinv/discriminator.hpp"
#include "styleinv/encoder.hpp"
#include "styleinv/synthetic.hpp"

namespace styleinv {

struct GanPretrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 16;
  double lr_g = 2e-3;
  double lr_d = 2e-3;
  double r1_gamma = 1.0;
  std::size_t r1_interval = 16;
  std::size_t mean_latent_samples = 4096;
};

struct InversionPretrainConfig {
  std::size_t steps = 1000;
  std::size_t batch = 16;
  double lr = 1e-3;
};

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch = 8;
  double lr_encoder = 1e-4;
  double lr_d = 2e-3;
  double lambda_l2 = 10.0;
  double lambda_reg = 0.05;
  double r1_gamma = 1.0;
  std::size_t r1_interval = 16;
  std::size_t max_t = 127;
  double truncation = 1.0;
  bool ada_enabled = false;
  double ada_target = 0.6;
  std::size_t ada_interval = 4;
  double ada_adjust = 0.01;
  /// Reconstruction term on the first frame.
  bool use_recon = true;
  /// Discriminator sees the first frame (4 frames) or only t1..t3.
  bool first_frame_in_d = true;
  std::size_t log_interval = 10;
  std::size_t checkpoint_interval = 0;
};

struct TransferConfig {
  std::size_t steps = 300;
  std::size_t batch = 8;
  std::size_t freeze_resolution = 16;
  double lr = 2e-3;
  double lr_d = 2e-3;
  double lambda_perceptual = 1.0;
  double lambda_identity = 1.0;
  double r1_gamma = 1.0;
  std::size_t r1_interval = 16;
};

struct EvalConfig {
  std::size_t num_clips = 64;
  std::size_t num_frames = 128;
  std::uint64_t feature_seed = 20240613;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  DatasetConfig data;
  DecoderConfig decoder;
  ApeConfig ape;
  std::size_t style_hidden = 64;
  std::size_t style_dim = 64;
  EncoderConfig encoder;
  bool render_with_noise = true;
  DiscriminatorConfig disc;
  GanPretrainConfig gan;
  InversionPretrainConfig inversion;
  TrainConfig train;
  TransferConfig transfer;
  EvalConfig eval;

  /// Propagates shared dimensions (resolution, channels, w_dim) and checks
  /// cross-module consistency.
  void finalize();

  StyleInVConfig styleinv() const;
};

/// Parses key = value text on top of the defaults. `origin` names the source
/// in error messages.
PipelineConfig parse_config(const std::string& text, const std::string& origin = "config");
PipelineConfig load_config(const std::string& path);
/// Every key with its current value, sorted by key.
std::string serialize_config(const PipelineConfig& cfg);
std::map<std::string, std::string> config_entries(const PipelineConfig& cfg);

}  // namespace styleinv
