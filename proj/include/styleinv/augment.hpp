#pragma once

// Differentiable discriminator augmentation: horizontal flip, circular
// integer translation and brightness shift. One draw is shared by every
// frame of a clip.

#include <cstdint>
#include <vector>

#include "styleinv/ops.hpp"
#include "styleinv/rng.hpp"

namespace styleinv {

struct AugmentParams {
  bool flip = false;
  int dx = 0;
  int dy = 0;
  double brightness = 0.0;

  bool spatial_identity() const { return !flip && dx == 0 && dy == 0; }
};

/// Each augmentation fires independently with probability p.
AugmentParams draw_augment(double p, std::size_t resolution, rng::Generator& gen);

/// Pixel index map realizing flip + translation; null for the identity.
SpatialMap spatial_map(const AugmentParams& a, std::size_t resolution);

/// x [N,C,R,R]; params has one entry per sample.
template <typename T>
Var<T> apply_augment(const Var<T>& x, const std::vector<AugmentParams>& params);

/// Adjusts p so that E[sign(real logits)] tracks the target.
struct AdaController {
  double p = 0.0;
  double target = 0.6;
  double adjust = 0.01;  // change of p per update

  double update(double real_sign_mean);
};

}  // namespace styleinv
