#include "heatcast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "heatcast/bundle.hpp"
#include "heatcast/common.hpp"
#include "heatcast/geotiff.hpp"

namespace heatcast {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).string();
}

bool is_tiff(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  return ext == ".tif" || ext == ".tiff";
}

std::vector<RasterLayer> load_raster_layers(const std::string& path) {
  if (is_tiff(path)) return geotiff_layers(read_geotiff(path));
  return layers_from_bundle(read_bundle(path));
}

ClassRaster load_class_raster(const std::string& path) {
  if (is_tiff(path)) return geotiff_classes(read_geotiff(path));
  // Bundle with float-encoded class codes.
  GridBundle bundle = read_bundle(path);
  if (bundle.bands.size() != 1)
    throw DataError("landcover bundle '" + path + "' must have one band");
  ClassRaster cr;
  cr.grid = bundle.grid;
  cr.classes.resize(bundle.bands[0].size());
  for (size_t i = 0; i < bundle.bands[0].size(); ++i) {
    const float v = bundle.bands[0][i];
    if (v != std::floor(v) || v < 0 || v >= float(kUrbanAtlasClasses))
      throw DataError(strprintf("landcover bundle '%s': bad class code %g",
                                path.c_str(), double(v)));
    cr.classes[i] = uint8_t(v);
  }
  return cr;
}

}  // namespace

BuildInputs BuildInputs::from_config(const Config& cfg,
                                     const std::string& base_dir,
                                     double resolution_override) {
  BuildInputs in;
  in.bands_dir = resolve(base_dir, cfg.require_str("data.bands_dir"));
  in.dem_path = resolve(base_dir, cfg.require_str("data.dem"));
  in.landcover_path = resolve(base_dir, cfg.require_str("data.landcover"));
  in.weather_csv = resolve(base_dir, cfg.require_str("data.weather_csv"));
  in.stations_csv = resolve(base_dir, cfg.require_str("data.stations_csv"));
  in.weather_names = cfg.get_list("data.weather_names");
  if (cfg.has("landcover.mapping_file"))
    in.mapping = ClassMapping::from_file(
        resolve(base_dir, cfg.require_str("landcover.mapping_file")));
  in.bbox.crs_id = cfg.get_str("grid.crs_id", "local");
  in.bbox.min_x = cfg.get_num("grid.min_x", 0.0);
  in.bbox.min_y = cfg.get_num("grid.min_y", 0.0);
  in.bbox.max_x = cfg.get_num("grid.max_x", 0.0);
  in.bbox.max_y = cfg.get_num("grid.max_y", 0.0);
  in.resolution = resolution_override > 0.0
                      ? resolution_override
                      : cfg.get_num("grid.resolution", 100.0);
  in.passage_seconds = int(cfg.get_int("data.passage_seconds", 36000));
  in.station_opts.min_readings = int(cfg.get_int("stations.min_readings", 100));
  in.station_opts.plausibility_band =
      cfg.get_bool("stations.plausibility_band", false);
  return in;
}

BuildSummary build_dataset(const BuildInputs& inputs,
                           const std::string& out_dir) {
  const Grid grid = make_grid(inputs.bbox, inputs.resolution);

  const std::vector<std::string> weather_names =
      inputs.weather_names.empty() ? default_weather_names()
                                   : inputs.weather_names;
  const ChannelLayout layout =
      ChannelLayout::canonical(inputs.mapping.group_names, weather_names);

  // Static layers.
  auto dem_layers = load_raster_layers(inputs.dem_path);
  if (dem_layers.size() != 1)
    throw DataError("DEM '" + inputs.dem_path + "' must have exactly one band");
  auto dem_imputed = impute(dem_layers[0]);
  if (!dem_imputed)
    throw DataError("DEM '" + inputs.dem_path +
                    "' fails the 75% validity threshold");
  const RasterLayer dem = resample_bilinear(*dem_imputed, grid);

  const ClassRaster landcover = load_class_raster(inputs.landcover_path);
  const std::vector<RasterLayer> fractions =
      class_fractions(landcover, grid, inputs.mapping);

  const WeatherSeries weather =
      read_weather_csv(inputs.weather_csv, weather_names);

  const auto readings = read_station_csv(inputs.stations_csv);
  const auto maxima_by_day =
      station_daily_maxima(readings, inputs.station_opts);

  // One scene per day under bands_dir: either <date>/ bundles or <date>.tif.
  std::vector<std::pair<Date, std::string>> scenes;
  for (const auto& entry : fs::directory_iterator(inputs.bands_dir)) {
    std::string stem = entry.path().filename().string();
    if (entry.is_regular_file() && is_tiff(entry.path().string()))
      stem = entry.path().stem().string();
    else if (!entry.is_directory())
      continue;
    scenes.emplace_back(date_from_string(stem), entry.path().string());
  }
  std::sort(scenes.begin(), scenes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (scenes.empty())
    throw DataError("build_dataset: no day scenes found in '" +
                    inputs.bands_dir + "'");

  Dataset data;
  data.grid = grid;
  data.layout_names = layout.names;
  data.passage_seconds = inputs.passage_seconds;

  BuildSummary summary;
  for (const auto& [date, path] : scenes) {
    ++summary.days_total;
    DayRecord day;
    day.date = date;

    auto band_layers = load_raster_layers(path);
    if (band_layers.size() != kSentinelBands)
      throw DataError(strprintf("scene '%s' has %zu bands, expected %d",
                                path.c_str(), band_layers.size(),
                                kSentinelBands));

    std::vector<RasterLayer> bands_ref;
    bool rejected = false;
    for (auto& layer : band_layers) {
      auto imputed = impute(layer);
      if (!imputed) {
        rejected = true;
        break;
      }
      bands_ref.push_back(resample_bilinear(*imputed, grid));
    }
    if (rejected) {
      day.ok = false;
      day.status = "rejected_imputation";
      log_info(strprintf("day %s rejected: valid pixels below the 75%% "
                         "threshold",
                         date_to_string(date).c_str()));
      ++summary.days_rejected;
      data.days.push_back(std::move(day));
      continue;
    }

    day.stack = assemble_stack(bands_ref, dem, fractions, weather.at(date),
                               date, inputs.passage_seconds, grid);

    auto it = maxima_by_day.find(date_serial(date));
    if (it != maxima_by_day.end()) {
      RasterizeResult rr = rasterize_stations(it->second, grid, date);
      day.target = std::move(rr.target);
      if (rr.outside_count > 0) {
        summary.stations_outside += rr.outside_count;
        log_info(strprintf("day %s: %lld station(s) outside the grid ignored",
                           date_to_string(date).c_str(),
                           (long long)rr.outside_count));
      }
    } else {
      day.target = TargetRaster(grid, date);
    }

    day.ok = true;
    day.status = "ok";
    ++summary.days_ok;
    data.days.push_back(std::move(day));
  }

  data.save(out_dir);
  return summary;
}

}  // namespace heatcast
