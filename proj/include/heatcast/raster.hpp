#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "heatcast/grid.hpp"

namespace heatcast {

// One float field on a grid plus a per-pixel validity mask. Values at
// invalid pixels are never read by consumers.
struct RasterLayer {
  Grid grid;
  std::vector<float> values;
  std::vector<uint8_t> valid;

  RasterLayer() = default;
  explicit RasterLayer(const Grid& g, float fill = 0.0f, bool all_valid = true)
      : grid(g),
        values(size_t(g.pixel_count()), fill),
        valid(size_t(g.pixel_count()), all_valid ? 1 : 0) {}

  float& at(int64_t r, int64_t c) { return values[grid.index(r, c)]; }
  float at(int64_t r, int64_t c) const { return values[grid.index(r, c)]; }
  bool valid_at(int64_t r, int64_t c) const {
    return valid[grid.index(r, c)] != 0;
  }
  void set(int64_t r, int64_t c, float v, bool ok = true) {
    values[grid.index(r, c)] = v;
    valid[grid.index(r, c)] = ok ? 1 : 0;
  }

  bool fully_valid() const {
    for (uint8_t v : valid)
      if (!v) return false;
    return true;
  }
};

// Small-integer class codes on a (usually finer) grid.
struct ClassRaster {
  Grid grid;
  std::vector<uint8_t> classes;

  uint8_t at(int64_t r, int64_t c) const { return classes[grid.index(r, c)]; }
};

// count(valid) / (rows * cols)
double valid_fraction(const RasterLayer& layer);

// Constant layer, all valid.
RasterLayer broadcast_scalar(float value, const Grid& grid);

// Scattered-hole fill: per invalid pixel, linear interpolation between the
// nearest originally-valid pixels along each cardinal axis (one-sided when
// only one side exists), averaging the axis estimates; the global valid
// mean when neither axis yields one. Returns nullopt (scene discarded)
// unless strictly more than 75% of pixels are valid.
std::optional<RasterLayer> impute(const RasterLayer& layer);

// Pixel-center bilinear resampling; source must be fully valid. Output is
// clamped to the source extent (edge extension), so it stays within the
// source min/max.
RasterLayer resample_bilinear(const RasterLayer& source, const Grid& target);

}  // namespace heatcast
