#include "heatcast/raster.hpp"

#include <algorithm>
#include <cmath>

#include "heatcast/common.hpp"

namespace heatcast {

double valid_fraction(const RasterLayer& layer) {
  if (layer.values.empty()) return 0.0;
  int64_t count = 0;
  for (uint8_t v : layer.valid) count += v ? 1 : 0;
  return double(count) / double(layer.values.size());
}

RasterLayer broadcast_scalar(float value, const Grid& grid) {
  return RasterLayer(grid, value, true);
}

std::optional<RasterLayer> impute(const RasterLayer& layer) {
  const int64_t rows = layer.grid.rows, cols = layer.grid.cols;
  const int64_t total = rows * cols;
  int64_t valid_count = 0;
  for (uint8_t v : layer.valid) valid_count += v ? 1 : 0;

  // Strictly more than 75%, decided in integer arithmetic so the boundary
  // is exact for any pixel count.
  if (4 * valid_count <= 3 * total) return std::nullopt;
  if (valid_count == total) return layer;

  double global_sum = 0.0;
  for (int64_t i = 0; i < total; ++i)
    if (layer.valid[size_t(i)]) global_sum += layer.values[size_t(i)];
  const float global_mean = float(global_sum / double(valid_count));

  RasterLayer out = layer;
  // All lookups use the original mask, so the fill is order-independent.
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      if (layer.valid_at(r, c)) continue;

      double est_sum = 0.0;
      int est_n = 0;

      int64_t left = -1, right = -1;
      for (int64_t j = c - 1; j >= 0; --j)
        if (layer.valid_at(r, j)) {
          left = j;
          break;
        }
      for (int64_t j = c + 1; j < cols; ++j)
        if (layer.valid_at(r, j)) {
          right = j;
          break;
        }
      if (left >= 0 && right >= 0) {
        const double a = double(c - left), b = double(right - c);
        est_sum += (b * layer.at(r, left) + a * layer.at(r, right)) / (a + b);
        ++est_n;
      } else if (left >= 0) {
        est_sum += layer.at(r, left);
        ++est_n;
      } else if (right >= 0) {
        est_sum += layer.at(r, right);
        ++est_n;
      }

      int64_t up = -1, down = -1;
      for (int64_t i = r - 1; i >= 0; --i)
        if (layer.valid_at(i, c)) {
          up = i;
          break;
        }
      for (int64_t i = r + 1; i < rows; ++i)
        if (layer.valid_at(i, c)) {
          down = i;
          break;
        }
      if (up >= 0 && down >= 0) {
        const double a = double(r - up), b = double(down - r);
        est_sum += (b * layer.at(up, c) + a * layer.at(down, c)) / (a + b);
        ++est_n;
      } else if (up >= 0) {
        est_sum += layer.at(up, c);
        ++est_n;
      } else if (down >= 0) {
        est_sum += layer.at(down, c);
        ++est_n;
      }

      out.set(r, c, est_n > 0 ? float(est_sum / est_n) : global_mean);
    }
  }
  std::fill(out.valid.begin(), out.valid.end(), uint8_t(1));
  return out;
}

RasterLayer resample_bilinear(const RasterLayer& source, const Grid& target) {
  if (!source.fully_valid())
    throw DataError("resample_bilinear: source has invalid pixels; impute first");
  const Grid& src = source.grid;
  if (src == target) return source;

  // Grid extents must overlap at all (pixel size, not bbox, drives the
  // actual coverage on the bottom/right).
  const double src_max_x = src.bbox.min_x + double(src.cols) * src.resolution;
  const double src_min_y = src.bbox.max_y - double(src.rows) * src.resolution;
  const double tgt_max_x =
      target.bbox.min_x + double(target.cols) * target.resolution;
  const double tgt_min_y =
      target.bbox.max_y - double(target.rows) * target.resolution;
  if (target.bbox.min_x >= src_max_x || tgt_max_x <= src.bbox.min_x ||
      target.bbox.max_y <= src_min_y || tgt_min_y >= src.bbox.max_y)
    throw DataError("resample_bilinear: grids do not overlap");

  RasterLayer out(target);
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < target.rows; ++r) {
    const double y = target.y_center(r);
    double rf = (src.bbox.max_y - y) / src.resolution - 0.5;
    rf = std::clamp(rf, 0.0, double(src.rows - 1));
    const int64_t r0 = int64_t(rf);
    const int64_t r1 = std::min(r0 + 1, src.rows - 1);
    const double ty = rf - double(r0);
    for (int64_t c = 0; c < target.cols; ++c) {
      const double x = target.x_center(c);
      double cf = (x - src.bbox.min_x) / src.resolution - 0.5;
      cf = std::clamp(cf, 0.0, double(src.cols - 1));
      const int64_t c0 = int64_t(cf);
      const int64_t c1 = std::min(c0 + 1, src.cols - 1);
      const double tx = cf - double(c0);
      const double v00 = source.at(r0, c0), v01 = source.at(r0, c1);
      const double v10 = source.at(r1, c0), v11 = source.at(r1, c1);
      const double top = v00 + tx * (v01 - v00);
      const double bot = v10 + tx * (v11 - v10);
      out.at(r, c) = float(top + ty * (bot - top));
    }
  }
  return out;
}

}  // namespace heatcast
