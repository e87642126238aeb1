#pragma once

#include <string>
#include <vector>

#include "heatcast/raster.hpp"

namespace heatcast {

// Portable raster interchange: a directory with header.json (crs_id, bbox,
// resolution, rows, cols, channel names, nodata sentinel) and data.bin,
// 32-bit IEEE-754 little-endian reals, row-major, band-sequential. Invalid
// pixels are stored as the nodata sentinel.
struct GridBundle {
  Grid grid;
  std::vector<std::string> channels;
  std::vector<std::vector<float>> bands;  // one rows*cols block per channel
  float nodata = -9999.0f;
};

void write_bundle(const std::string& dir, const GridBundle& bundle);
GridBundle read_bundle(const std::string& dir);

// Mask-aware conversions between bundles and raster layers.
GridBundle bundle_from_layers(const std::vector<std::string>& names,
                              const std::vector<RasterLayer>& layers,
                              float nodata = -9999.0f);
std::vector<RasterLayer> layers_from_bundle(const GridBundle& bundle);

}  // namespace heatcast
