#pragma once

#include <string>

#include "heatcast/config.hpp"
#include "heatcast/dataset.hpp"
#include "heatcast/landcover.hpp"
#include "heatcast/stations.hpp"

namespace heatcast {

// Raw inputs for one dataset build. Raster paths may point either at grid
// bundles (directories) or at GeoTIFF files.
struct BuildInputs {
  std::string bands_dir;  // one bundle dir or .tif per day, named YYYY-MM-DD
  std::string dem_path;
  std::string landcover_path;
  std::string weather_csv;
  std::string stations_csv;
  std::vector<std::string> weather_names;  // defaults when empty
  ClassMapping mapping = ClassMapping::urban_atlas_default();
  BoundingBox bbox;
  double resolution = 100.0;
  int passage_seconds = 36000;
  StationOptions station_opts;

  // Reads the data.* / grid.* / stations.* keys; relative paths resolve
  // against base_dir.
  static BuildInputs from_config(const Config& cfg, const std::string& base_dir,
                                 double resolution_override = 0.0);
};

struct BuildSummary {
  int days_total = 0;
  int days_ok = 0;
  int days_rejected = 0;
  int64_t stations_outside = 0;
};

// Per day: validity check and imputation at native resolution (scenes with
// <= 75% valid pixels are rejected), bilinear resampling to the target
// grid, land-cover fractions, weather broadcast, temporal/coordinate
// channels, and station rasterization.
BuildSummary build_dataset(const BuildInputs& inputs, const std::string& out_dir);

}  // namespace heatcast
