#pragma once

#include <cstdint>
#include <string>

namespace heatcast {

// Axis-aligned extent in a projected CRS, meters.
struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  std::string crs_id = "local";

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
};

// Georeferenced pixel lattice. Pixel (0,0) is the north-west corner; the
// grid may overhang the bbox on the bottom/right because the shape is
// derived by ceiling division.
struct Grid {
  BoundingBox bbox;
  double resolution = 1.0;  // meters per pixel
  int64_t rows = 0;
  int64_t cols = 0;

  int64_t pixel_count() const { return rows * cols; }
  size_t index(int64_t r, int64_t c) const { return size_t(r * cols + c); }

  double x_center(int64_t c) const {
    return bbox.min_x + (double(c) + 0.5) * resolution;
  }
  double y_center(int64_t r) const {
    return bbox.max_y - (double(r) + 0.5) * resolution;
  }

  bool same_shape(const Grid& o) const {
    return rows == o.rows && cols == o.cols;
  }

  bool operator==(const Grid& o) const {
    return bbox.min_x == o.bbox.min_x && bbox.min_y == o.bbox.min_y &&
           bbox.max_x == o.bbox.max_x && bbox.max_y == o.bbox.max_y &&
           resolution == o.resolution && rows == o.rows && cols == o.cols;
  }
};

// Ceiling division of the bbox extent, so no area at the edge is lost.
Grid make_grid(const BoundingBox& bbox, double resolution);

}  // namespace heatcast
