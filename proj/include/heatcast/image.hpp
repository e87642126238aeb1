#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace heatcast {

// 8-bit RGB raster, row-major.
struct RgbImage {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> pixels;  // width*height*3

  RgbImage() = default;
  RgbImage(int64_t w, int64_t h, uint8_t fill = 0)
      : width(w), height(h), pixels(size_t(w * h * 3), fill) {}

  void set(int64_t x, int64_t y, std::array<uint8_t, 3> rgb) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = size_t(y * width + x) * 3;
    pixels[i] = rgb[0];
    pixels[i + 1] = rgb[1];
    pixels[i + 2] = rgb[2];
  }
};

// t in [0,1] -> cold-to-hot color ramp.
std::array<uint8_t, 3> thermal_color(double t);

// Minimal PNG encoder (8-bit RGB, zlib-deflate IDAT).
void write_png(const std::string& path, const RgbImage& image);

// 5x7 bitmap glyphs for digits, '.', '-', and the letters used by the map
// legend; unknown characters render as blanks.
void draw_text(RgbImage& image, int64_t x, int64_t y, const std::string& text,
               std::array<uint8_t, 3> rgb, int scale = 1);

}  // namespace heatcast
