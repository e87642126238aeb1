#include "heatcast/stations.hpp"

#include <algorithm>
#include <cmath>

#include "heatcast/common.hpp"
#include "heatcast/csv.hpp"

namespace heatcast {

std::optional<float> daily_max(std::span<const float> readings,
                               int min_readings) {
  if (int(readings.size()) < min_readings) return std::nullopt;
  float best = readings[0];
  for (float v : readings) best = std::max(best, v);
  return best;
}

std::vector<StationReading> read_station_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  const int id_col = table.column("station_id");
  const int x_col = table.column("x");
  const int y_col = table.column("y");
  const int ts_col = table.column("timestamp");
  const int t_col = table.column("temperature_c");
  if (id_col < 0 || x_col < 0 || y_col < 0 || ts_col < 0 || t_col < 0)
    throw DataError("station CSV '" + path +
                    "': expected columns station_id,x,y,timestamp,temperature_c");

  std::vector<StationReading> out;
  out.reserve(table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    StationReading r;
    r.station_id = row[size_t(id_col)];
    try {
      r.x = std::stod(row[size_t(x_col)]);
      r.y = std::stod(row[size_t(y_col)]);
      r.temperature_c = std::stof(row[size_t(t_col)]);
    } catch (const std::exception&) {
      throw DataError(strprintf("station CSV '%s' row %zu: bad numeric cell",
                                path.c_str(), i + 2));
    }
    if (!std::isfinite(r.temperature_c))
      throw DataError(strprintf("station CSV '%s' row %zu: non-finite "
                                "temperature",
                                path.c_str(), i + 2));
    r.time = timestamp_from_string(row[size_t(ts_col)]);
    out.push_back(std::move(r));
  }
  return out;
}

std::map<int64_t, std::vector<StationDailyMax>> station_daily_maxima(
    const std::vector<StationReading>& readings, const StationOptions& opts) {
  struct Key {
    int64_t day;
    std::string station;
    bool operator<(const Key& o) const {
      return day != o.day ? day < o.day : station < o.station;
    }
  };
  struct Acc {
    double x = 0.0, y = 0.0;
    std::vector<float> temps;
  };
  std::map<Key, Acc> buckets;
  for (const auto& r : readings) {
    if (opts.plausibility_band && (r.temperature_c < opts.plausible_min_c ||
                                   r.temperature_c > opts.plausible_max_c))
      continue;
    Acc& acc = buckets[Key{date_serial(r.time.date), r.station_id}];
    acc.x = r.x;
    acc.y = r.y;
    acc.temps.push_back(r.temperature_c);
  }

  std::map<int64_t, std::vector<StationDailyMax>> out;
  for (const auto& [key, acc] : buckets) {
    auto m = daily_max(acc.temps, opts.min_readings);
    if (!m) continue;
    out[key.day].push_back(StationDailyMax{key.station, acc.x, acc.y, *m});
  }
  return out;
}

std::optional<std::pair<int64_t, int64_t>> point_to_pixel(const Grid& grid,
                                                          double x, double y) {
  // Half-open footprints: [x0, x0+r) horizontally, [y0, y0+r) vertically
  // (bottom edge included, top excluded).
  const int64_t c = int64_t(std::floor((x - grid.bbox.min_x) / grid.resolution));
  const int64_t r =
      int64_t(std::ceil((grid.bbox.max_y - y) / grid.resolution)) - 1;
  if (c < 0 || c >= grid.cols || r < 0 || r >= grid.rows) return std::nullopt;
  return std::pair<int64_t, int64_t>{r, c};
}

RasterizeResult rasterize_stations(const std::vector<StationDailyMax>& maxima,
                                   const Grid& grid, const Date& date) {
  RasterizeResult result;
  result.target = TargetRaster(grid, date);
  std::vector<double> sum(size_t(grid.pixel_count()), 0.0);
  std::vector<int64_t> count(size_t(grid.pixel_count()), 0);

  for (const auto& s : maxima) {
    const auto pixel = point_to_pixel(grid, s.x, s.y);
    if (!pixel) {
      ++result.outside_count;
      continue;
    }
    const auto [r, c] = *pixel;
    sum[grid.index(r, c)] += double(s.t_max);
    ++count[grid.index(r, c)];
  }

  for (size_t i = 0; i < sum.size(); ++i) {
    if (count[i] > 0) {
      result.target.values[i] = float(sum[i] / double(count[i]));
      result.target.valid[i] = 1;
    }
  }
  return result;
}

}  // namespace heatcast
