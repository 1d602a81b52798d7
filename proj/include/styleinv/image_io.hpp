#pragma once

#include <string>
#include <vector>

#include "styleinv/tensor.hpp"

namespace styleinv {

/// Writes a [C,H,W] image with values in [-1, 1] (clamped) as 8-bit PNG.
/// C must be 1 or 3.
void write_png(const std::string& path, const Tensor<float>& image);

/// Reads an 8-bit gray, RGB or RGBA PNG into [C,H,W] in [-1, 1] (C = 1 or 3,
/// alpha dropped). Throws std::runtime_error on failure.
Tensor<float> read_png(const std::string& path);

/// Lays out equally sized [C,H,W] images row by row, `columns` per row.
Tensor<float> tile_images(const std::vector<Tensor<float>>& images, std::size_t columns);

}  // namespace styleinv
