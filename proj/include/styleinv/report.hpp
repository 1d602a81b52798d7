#pragma once

#include <string>
#include <utility>
#include <vector>

#include "styleinv/config.hpp"
#include "styleinv/pipeline.hpp"

namespace styleinv {

struct EvalReport {
  double fid = 0;
  double fvd16 = 0;
  double fvd_long = 0;
  std::size_t long_len = 0;
  double identity_drift = 0;
  double latent_jump = 0;
  double recon = 0;  // mean first-frame reconstruction error

  /// key = value pairs in a fixed order.
  std::vector<std::pair<std::string, double>> entries() const;
  std::string text() const;
  std::string json() const;
};

/// Generated clips for fixed evaluation seeds against the first frames of
/// the dataset's videos. Latents come from the pipeline; `render` (default:
/// the pipeline's decoder) draws the frames.
EvalReport evaluate_model(const Pipeline& p, const SyntheticDataset& data, const EvalConfig& cfg,
                          const Decoder<float>* render = nullptr);

/// Video seed of evaluation clip i; shared by every model evaluated.
std::uint64_t eval_video_seed(std::size_t i);

}  // namespace styleinv
