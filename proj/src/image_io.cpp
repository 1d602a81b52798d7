#include "styleinv/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace styleinv {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, const Tensor<float>& image) {
  const Shape& s = image.shape();
  if (s.rank() != 3 || (s[0] != 1 && s[0] != 3)) throw ShapeError("write_png expects [1|3,H,W], got " + s.str());
  const std::size_t c = s[0], h = s[1], w = s[2];
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<png_byte> row(w * c);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed writing " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const float v = std::clamp(image[(ch * h + y) * w + x], -1.0f, 1.0f);
        row[x * c + ch] = static_cast<png_byte>(std::lround((v + 1.0f) * 127.5f));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<float> read_png(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw std::runtime_error(path + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed reading " + path);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const std::size_t w = png_get_image_width(png, info), h = png_get_image_height(png, info);
  const std::size_t c = png_get_channels(png, info);
  if (c != 1 && c != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": unsupported channel count " + std::to_string(c));
  }
  std::vector<png_byte> buf(w * h * c);
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = buf.data() + y * w * c;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  Tensor<float> out(Shape{c, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) out[(ch * h + y) * w + x] = buf[(y * w + x) * c + ch] / 127.5f - 1.0f;
  return out;
}

Tensor<float> tile_images(const std::vector<Tensor<float>>& images, std::size_t columns) {
  if (images.empty() || columns == 0) throw ShapeError("tile_images needs images and a positive column count");
  const Shape& s = images[0].shape();
  const std::size_t c = s[0], h = s[1], w = s[2];
  const std::size_t rows = (images.size() + columns - 1) / columns;
  const std::size_t cols = std::min(columns, images.size());
  Tensor<float> out(Shape{c, rows * h, cols * w}, -1.0f);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != s) throw ShapeError("tile_images: images differ in shape");
    const std::size_t oy = (i / columns) * h, ox = (i % columns) * w;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          out[(ch * rows * h + oy + y) * cols * w + ox + x] = images[i][(ch * h + y) * w + x];
  }
  return out;
}

}  // namespace styleinv
