#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heatcast/dates.hpp"
#include "heatcast/grid.hpp"

namespace heatcast {

struct StationReading {
  std::string station_id;
  double x = 0.0;  // projected coordinates, same CRS as the grid
  double y = 0.0;
  Timestamp time;
  float temperature_c = 0.0f;
};

// Sparse ground-truth raster: valid pixels carry the mean of the daily
// maxima of the stations that fall inside them; everything else is invalid
// and excluded from every loss and metric.
struct TargetRaster {
  Grid grid;
  Date date;
  std::vector<float> values;
  std::vector<uint8_t> valid;

  TargetRaster() = default;
  explicit TargetRaster(const Grid& g, const Date& d = {})
      : grid(g),
        date(d),
        values(size_t(g.pixel_count()), 0.0f),
        valid(size_t(g.pixel_count()), 0) {}

  int64_t valid_count() const {
    int64_t n = 0;
    for (uint8_t v : valid) n += v ? 1 : 0;
    return n;
  }
};

// One accepted station-day.
struct StationDailyMax {
  std::string station_id;
  double x = 0.0;
  double y = 0.0;
  float t_max = 0.0f;
};

struct StationOptions {
  int min_readings = 100;  // station-day completeness threshold
  bool plausibility_band = false;
  float plausible_min_c = -30.0f;
  float plausible_max_c = 50.0f;
};

// Maximum of one station's readings within one local calendar day, or
// nullopt when the day has fewer than min_readings readings.
std::optional<float> daily_max(std::span<const float> readings,
                               int min_readings);

// CSV columns: station_id,x,y,timestamp,temperature_c.
std::vector<StationReading> read_station_csv(const std::string& path);

// Group readings by (station, day) and reduce to daily maxima.
std::map<int64_t, std::vector<StationDailyMax>> station_daily_maxima(
    const std::vector<StationReading>& readings, const StationOptions& opts);

// Pixel containing a point under the half-open footprint convention
// ([x0, x0+r) horizontally, bottom edge included vertically), or nullopt
// when the point is outside the grid.
std::optional<std::pair<int64_t, int64_t>> point_to_pixel(const Grid& grid,
                                                          double x, double y);

// Point-in-pixel uses half-open footprints; stations outside the grid are
// ignored (their count is logged by the caller via the return).
struct RasterizeResult {
  TargetRaster target;
  int64_t outside_count = 0;
};
RasterizeResult rasterize_stations(const std::vector<StationDailyMax>& maxima,
                                   const Grid& grid, const Date& date);

}  // namespace heatcast
