#include "heatcast/grid.hpp"

#include <cmath>

#include "heatcast/common.hpp"

namespace heatcast {

static int64_t ceil_cells(double extent, double resolution) {
  // Tiny relative shrink so exact multiples are not bumped by fp noise.
  return int64_t(std::ceil((extent / resolution) * (1.0 - 1e-12)));
}

Grid make_grid(const BoundingBox& bbox, double resolution) {
  if (!(resolution > 0.0))
    throw DataError(strprintf("make_grid: resolution must be positive, got %g",
                              resolution));
  if (!(bbox.max_x > bbox.min_x) || !(bbox.max_y > bbox.min_y))
    throw DataError("make_grid: degenerate bounding box");
  Grid g;
  g.bbox = bbox;
  g.resolution = resolution;
  g.rows = ceil_cells(bbox.height(), resolution);
  g.cols = ceil_cells(bbox.width(), resolution);
  return g;
}

}  // namespace heatcast
