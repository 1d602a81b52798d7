#pragma once

// Moving-shapes video dataset. Each video keeps one shape, colour and size
// for its whole length and moves it along a circular orbit while spinning.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "styleinv/rng.hpp"
#include "styleinv/tensor.hpp"

namespace styleinv {

enum class ShapeKind { disc, square, triangle };

std::string to_string(ShapeKind k);

struct VideoSpec {
  ShapeKind shape = ShapeKind::disc;
  std::array<double, 3> color{0.8, 0.2, -0.4};  // in [-1, 1]
  double size = 10.0;                          // radius / half-side in pixels
  double orbit_radius = 8.0;                   // pixels
  double angular_velocity = 0.05;              // radians per frame
  double phase = 0.0;
  double spin = 0.0;                           // shape rotation, radians per frame
  std::size_t length = 128;
  std::size_t resolution = 64;
  double background = -0.8;

  /// Object centre at frame t in pixel coordinates (x right, y down).
  std::array<double, 2> center(double t) const;
};

/// Anti-aliased frame [3, R, R] with values in [-1, 1]; 4x4 supersampling.
Tensor<float> render_frame(const VideoSpec& spec, std::size_t t);

struct DatasetConfig {
  std::size_t num_videos = 64;
  std::size_t length = 128;
  std::size_t resolution = 64;
  std::uint64_t seed = 1;
  /// Rotates every colour's channels and lightens the background; used to
  /// build colour-remapped target sets for style transfer.
  bool remap_colors = false;
};

class SyntheticDataset {
 public:
  explicit SyntheticDataset(const DatasetConfig& cfg);

  const DatasetConfig& config() const { return cfg_; }
  std::size_t size() const { return specs_.size(); }
  const VideoSpec& spec(std::size_t video) const { return specs_.at(video); }
  Tensor<float> frame(std::size_t video, std::size_t t) const { return render_frame(spec(video), t); }

  /// Writes frame_%06d.png for every frame of one video into `dir`.
  void export_video(std::size_t video, const std::string& dir) const;

 private:
  DatasetConfig cfg_;
  std::vector<VideoSpec> specs_;
};

/// (0, t1, t2, t3) with t1 < t2 < t3 drawn uniformly without replacement
/// from [1, max_t].
std::array<std::size_t, 4> sample_timestamps(std::size_t max_t, rng::Generator& gen);

/// Picks a video uniformly, then a frame uniformly inside it, so short
/// videos are not under-represented.
struct ClassAwareSampler {
  std::vector<std::size_t> lengths;
  std::pair<std::size_t, std::size_t> sample(rng::Generator& gen) const;
};

struct ClipSample {
  std::size_t video = 0;
  std::array<std::size_t, 4> timestamps{};
  std::array<double, 3> deltas{};
  std::array<Tensor<float>, 4> frames;
};

ClipSample sample_clip(const SyntheticDataset& data, rng::Generator& gen, std::size_t max_t);

/// Stacks [C,H,W] images into [N,C,H,W].
Tensor<float> stack_images(const std::vector<Tensor<float>>& images);

}  // namespace styleinv
