#include "styleinv/augment.hpp"

#include <algorithm>
#include <memory>

namespace styleinv {

AugmentParams draw_augment(double p, std::size_t resolution, rng::Generator& gen) {
  AugmentParams a;
  // fixed number of draws per clip keeps the stream aligned for any p
  const double u_flip = gen.uniform(), u_shift = gen.uniform(), u_bright = gen.uniform();
  const auto max_shift = static_cast<int>(resolution / 8);
  const int dx = static_cast<int>(gen.below(2 * max_shift + 1)) - max_shift;
  const int dy = static_cast<int>(gen.below(2 * max_shift + 1)) - max_shift;
  const double b = 0.2 * gen.normal();
  a.flip = u_flip < p;
  if (u_shift < p) {
    a.dx = dx;
    a.dy = dy;
  }
  if (u_bright < p) a.brightness = b;
  return a;
}

SpatialMap spatial_map(const AugmentParams& a, std::size_t resolution) {
  if (a.spatial_identity()) return nullptr;
  const auto r = static_cast<long>(resolution);
  auto map = std::make_shared<std::vector<std::uint32_t>>(resolution * resolution);
  for (long y = 0; y < r; ++y)
    for (long x = 0; x < r; ++x) {
      long sx = ((x - a.dx) % r + r) % r;
      const long sy = ((y - a.dy) % r + r) % r;
      if (a.flip) sx = r - 1 - sx;
      (*map)[static_cast<std::size_t>(y * r + x)] = static_cast<std::uint32_t>(sy * r + sx);
    }
  return map;
}

template <typename T>
Var<T> apply_augment(const Var<T>& x, const std::vector<AugmentParams>& params) {
  const auto& s = x.shape();
  if (s.rank() != 4 || params.size() != s[0] || s[2] != s[3])
    throw ShapeError("apply_augment expects [N,C,R,R] with one parameter set per sample");
  Var<T> out = x;
  std::vector<SpatialMap> maps;
  bool any_spatial = false, any_bright = false;
  for (const auto& a : params) {
    maps.push_back(spatial_map(a, s[2]));
    any_spatial = any_spatial || maps.back() != nullptr;
    any_bright = any_bright || a.brightness != 0.0;
  }
  if (any_spatial) out = remap_spatial(out, maps);
  if (any_bright) {
    Tensor<T> b(Shape{s[0], 1, 1, 1});
    for (std::size_t n = 0; n < s[0]; ++n) b[n] = static_cast<T>(params[n].brightness);
    out = add(out, expand(constant(std::move(b)), s));
  }
  return out;
}

double AdaController::update(double real_sign_mean) {
  if (real_sign_mean > target) p += adjust;
  else if (real_sign_mean < target) p -= adjust;
  p = std::clamp(p, 0.0, 1.0);
  return p;
}

template Var<float> apply_augment(const Var<float>&, const std::vector<AugmentParams>&);
template Var<double> apply_augment(const Var<double>&, const std::vector<AugmentParams>&);

}  // namespace styleinv
