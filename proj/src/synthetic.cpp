#include "styleinv/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "styleinv/image_io.hpp"

namespace styleinv {

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::disc: return "disc";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
  }
  return "?";
}

std::array<double, 2> VideoSpec::center(double t) const {
  const double c = static_cast<double>(resolution) / 2.0;
  const double a = angular_velocity * t + phase;
  return {c + orbit_radius * std::cos(a), c + orbit_radius * std::sin(a)};
}

namespace {

bool inside(ShapeKind kind, double x, double y, double size) {
  switch (kind) {
    case ShapeKind::disc: return x * x + y * y <= size * size;
    case ShapeKind::square: return std::abs(x) <= size && std::abs(y) <= size;
    case ShapeKind::triangle: {
      // equilateral, circumradius 1.2 * size, one vertex pointing up
      const double r = 1.2 * size;
      const double h = r / 2.0;  // inradius
      for (int e = 0; e < 3; ++e) {
        const double a = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * (e + 0.5) / 3.0;
        if (x * std::cos(a) - y * std::sin(a) > h) return false;
      }
      return true;
    }
  }
  return false;
}

std::array<double, 3> hsv_to_signed_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  std::array<double, 3> rgb{};
  switch (static_cast<int>(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  for (auto& ch : rgb) ch = 2.0 * (ch + v - c) - 1.0;
  return rgb;
}

}  // namespace

Tensor<float> render_frame(const VideoSpec& spec, std::size_t t) {
  if (t >= spec.length)
    throw std::out_of_range("frame " + std::to_string(t) + " outside video of length " + std::to_string(spec.length));
  const std::size_t r = spec.resolution;
  constexpr int ss = 4;
  const auto [cx, cy] = spec.center(static_cast<double>(t));
  const double rot = spec.spin * static_cast<double>(t);
  const double cr = std::cos(rot), sr = std::sin(rot);
  Tensor<float> img(Shape{3, r, r});
  for (std::size_t py = 0; py < r; ++py)
    for (std::size_t px = 0; px < r; ++px) {
      int hits = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const double x = static_cast<double>(px) + (sx + 0.5) / ss - cx;
          const double y = static_cast<double>(py) + (sy + 0.5) / ss - cy;
          // rotate into the object frame
          hits += inside(spec.shape, cr * x + sr * y, -sr * x + cr * y, spec.size);
        }
      const double cover = static_cast<double>(hits) / (ss * ss);
      for (std::size_t c = 0; c < 3; ++c)
        img[(c * r + py) * r + px] =
            static_cast<float>(std::clamp(spec.background + cover * (spec.color[c] - spec.background), -1.0, 1.0));
    }
  return img;
}

SyntheticDataset::SyntheticDataset(const DatasetConfig& cfg) : cfg_(cfg) {
  if (cfg_.num_videos == 0) throw std::invalid_argument("dataset needs at least one video");
  if (cfg_.resolution < 8) throw std::invalid_argument("dataset resolution must be >= 8");
  const double res = static_cast<double>(cfg_.resolution);
  for (std::size_t v = 0; v < cfg_.num_videos; ++v) {
    rng::Generator g(rng::derive_seed(cfg_.seed, v), rng::Stream::dataset);
    VideoSpec s;
    s.shape = static_cast<ShapeKind>(g.below(3));
    s.color = hsv_to_signed_rgb(g.uniform(), g.uniform(0.6, 1.0), g.uniform(0.85, 1.0));
    s.size = res * g.uniform(0.12, 0.2);
    s.orbit_radius = res * g.uniform(0.08, 0.22);
    const double speed = g.uniform(0.025, 0.07);
    s.angular_velocity = g.uniform() < 0.5 ? -speed : speed;
    s.phase = g.uniform(0.0, 2.0 * std::numbers::pi);
    s.spin = g.uniform(-0.05, 0.05);
    s.length = cfg_.length;
    s.resolution = cfg_.resolution;
    if (cfg_.remap_colors) {
      s.color = {s.color[2], s.color[0], s.color[1]};
      s.background = 0.5;
    }
    specs_.push_back(s);
  }
}

void SyntheticDataset::export_video(std::size_t video, const std::string& dir) const {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t t = 0; t < spec(video).length; ++t) {
    std::snprintf(name, sizeof(name), "frame_%06zu.png", t);
    write_png((std::filesystem::path(dir) / name).string(), frame(video, t));
  }
}

std::array<std::size_t, 4> sample_timestamps(std::size_t max_t, rng::Generator& gen) {
  if (max_t < 3) throw std::invalid_argument("max_t must be >= 3, got " + std::to_string(max_t));
  std::array<std::size_t, 4> ts{0, 0, 0, 0};
  std::size_t k = 1;
  while (k < 4) {
    const std::size_t c = 1 + gen.below(max_t);
    if (std::find(ts.begin() + 1, ts.begin() + static_cast<std::ptrdiff_t>(k), c) != ts.begin() + static_cast<std::ptrdiff_t>(k))
      continue;
    ts[k++] = c;
  }
  std::sort(ts.begin() + 1, ts.end());
  return ts;
}

std::pair<std::size_t, std::size_t> ClassAwareSampler::sample(rng::Generator& gen) const {
  if (lengths.empty()) throw std::invalid_argument("class-aware sampler over an empty dataset");
  const std::size_t v = gen.below(lengths.size());
  if (lengths[v] == 0) throw std::invalid_argument("video with no frames");
  return {v, gen.below(lengths[v])};
}

ClipSample sample_clip(const SyntheticDataset& data, rng::Generator& gen, std::size_t max_t) {
  ClipSample c;
  c.video = gen.below(data.size());
  if (max_t >= data.spec(c.video).length)
    throw std::invalid_argument("max_t " + std::to_string(max_t) + " exceeds the video length");
  c.timestamps = sample_timestamps(max_t, gen);
  for (std::size_t i = 0; i < 3; ++i) c.deltas[i] = static_cast<double>(c.timestamps[i + 1] - c.timestamps[i]);
  for (std::size_t i = 0; i < 4; ++i) c.frames[i] = data.frame(c.video, c.timestamps[i]);
  return c;
}

Tensor<float> stack_images(const std::vector<Tensor<float>>& images) {
  if (images.empty()) throw ShapeError("stack_images needs at least one image");
  const Shape& s = images[0].shape();
  std::vector<std::size_t> dims{images.size()};
  dims.insert(dims.end(), s.dims().begin(), s.dims().end());
  Tensor<float> out{Shape(dims)};
  std::size_t off = 0;
  for (const auto& im : images) {
    if (im.shape() != s) throw ShapeError("stack_images: images differ in shape");
    std::copy(im.vec().begin(), im.vec().end(), out.vec().begin() + static_cast<std::ptrdiff_t>(off));
    off += im.numel();
  }
  return out;
}

}  // namespace styleinv
