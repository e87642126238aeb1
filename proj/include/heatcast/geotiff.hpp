#pragma once

#include <optional>
#include <string>
#include <vector>

#include "heatcast/raster.hpp"

namespace heatcast {

// Decoded GeoTIFF contents. Exactly one of float_bands / byte_bands is
// populated depending on the sample type.
struct GeoTiffData {
  Grid grid;
  bool is_float = false;
  std::vector<std::vector<float>> float_bands;
  std::vector<std::vector<uint8_t>> byte_bands;
  std::optional<float> nodata;  // GDAL_NODATA tag when present
};

// Minimal classic-TIFF reader for the variants this pipeline ingests:
// single- or multi-band, uncompressed or deflate, striped or tiled, 32-bit
// float or 8-bit class data, chunky planar layout, II or MM byte order,
// geotransform from ModelPixelScale + ModelTiepoint. Anything else raises
// DataError with advice to convert offline.
GeoTiffData read_geotiff(const std::string& path);

// Float bands as masked layers (nodata pixels invalid).
std::vector<RasterLayer> geotiff_layers(const GeoTiffData& data);

// 8-bit band as a class raster.
ClassRaster geotiff_classes(const GeoTiffData& data, int band = 0);

}  // namespace heatcast
