#include "heatcast/features.hpp"

#include <cmath>
#include <set>

#include "heatcast/common.hpp"
#include "heatcast/csv.hpp"

namespace heatcast {

std::vector<std::string> default_weather_names() {
  return {"tempmax",    "tempmin",  "temp",           "dew",
          "humidity",   "precip",   "windgust",       "windspeed",
          "winddir",    "pressure", "cloudcover",     "visibility",
          "solarradiation", "solarenergy", "uvindex"};
}

ChannelLayout ChannelLayout::canonical(
    const std::array<std::string, 10>& landcover_names,
    const std::vector<std::string>& weather_names) {
  if (weather_names.size() != kWeatherIndicators)
    throw DataError(strprintf("channel layout: expected %d weather names, got %zu",
                              kWeatherIndicators, weather_names.size()));
  ChannelLayout layout;
  layout.names = {"F1", "F2", "S7", "S8", "S9", "DEM"};
  for (const auto& n : landcover_names) layout.names.push_back(n);
  for (const auto& n : weather_names) layout.names.push_back(n);
  layout.names.push_back("coord_x");
  layout.names.push_back("coord_y");
  for (const char* n : {"sin_doy", "cos_doy", "sin_dow", "cos_dow", "sin_tod",
                        "cos_tod"})
    layout.names.push_back(n);

  if (layout.names.size() != kStackChannels)
    throw DataError("channel layout: expected 39 channels");
  std::set<std::string> unique(layout.names.begin(), layout.names.end());
  if (unique.size() != layout.names.size())
    throw DataError("channel layout: duplicate channel names");
  return layout;
}

int ChannelLayout::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return int(i);
  return -1;
}

std::pair<double, double> circular_encode(double value, double period) {
  if (!(period > 0.0))
    throw std::invalid_argument("circular_encode: period must be positive");
  const double angle = 2.0 * M_PI * value / period;
  return {std::sin(angle), std::cos(angle)};
}

std::array<float, 6> temporal_channels(const Date& date,
                                       int passage_time_seconds) {
  if (passage_time_seconds < 0 || passage_time_seconds >= 86400)
    throw DataError("temporal_channels: passage time outside [0, 86400)");
  if (passage_time_seconds < 9 * 3600 || passage_time_seconds > 11 * 3600)
    log_warn(strprintf("passage time %ds on %s is outside the 9-11 AM window",
                       passage_time_seconds, date_to_string(date).c_str()));
  const auto doy = circular_encode(double(day_of_year(date) - 1),
                                   double(days_in_year(date.year)));
  const auto dow = circular_encode(double(weekday_index(date)), 7.0);
  const auto tod = circular_encode(double(passage_time_seconds), 86400.0);
  return {float(doy.first), float(doy.second), float(dow.first),
          float(dow.second), float(tod.first), float(tod.second)};
}

std::pair<RasterLayer, RasterLayer> coordinate_channels(const Grid& grid) {
  RasterLayer xr(grid), yr(grid);
  for (int64_t r = 0; r < grid.rows; ++r) {
    const float yv = grid.rows > 1
                         ? float(2.0 * double(r) / double(grid.rows - 1) - 1.0)
                         : 0.0f;
    for (int64_t c = 0; c < grid.cols; ++c) {
      const float xv =
          grid.cols > 1 ? float(2.0 * double(c) / double(grid.cols - 1) - 1.0)
                        : 0.0f;
      xr.at(r, c) = xv;
      yr.at(r, c) = yv;
    }
  }
  return {std::move(xr), std::move(yr)};
}

const std::vector<float>& WeatherSeries::at(const Date& d) const {
  auto it = by_day.find(date_serial(d));
  if (it == by_day.end())
    throw DataError("weather series has no row for " + date_to_string(d));
  return it->second;
}

WeatherSeries read_weather_csv(const std::string& path,
                               const std::vector<std::string>& expected_names) {
  CsvTable table = read_csv(path);
  const int date_col = table.column("date");
  if (date_col < 0)
    throw DataError("weather CSV '" + path + "': missing 'date' column");

  WeatherSeries series;
  series.names = expected_names;
  std::vector<int> cols;
  for (const auto& name : expected_names) {
    const int c = table.column(name);
    if (c < 0)
      throw DataError("weather CSV '" + path + "': missing indicator column '" +
                      name + "'");
    cols.push_back(c);
  }

  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const Date d = date_from_string(row[size_t(date_col)]);
    std::vector<float> values;
    values.reserve(expected_names.size());
    for (int c : cols) {
      const std::string& cell = row[size_t(c)];
      if (cell.empty())
        throw DataError(strprintf(
            "weather CSV '%s' row %zu: missing cell (no missing values "
            "allowed)",
            path.c_str(), i + 2));
      try {
        values.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw DataError(strprintf("weather CSV '%s' row %zu: bad number '%s'",
                                  path.c_str(), i + 2, cell.c_str()));
      }
    }
    series.by_day[date_serial(d)] = std::move(values);
  }
  return series;
}

FeatureStack assemble_stack(const std::vector<RasterLayer>& bands,
                            const RasterLayer& dem,
                            const std::vector<RasterLayer>& fractions,
                            const std::vector<float>& weather,
                            const Date& date, int passage_time_seconds,
                            const Grid& grid) {
  if (bands.size() != kSentinelBands)
    throw DataError(strprintf("assemble_stack: expected %d Sentinel bands, got "
                              "%zu",
                              kSentinelBands, bands.size()));
  if (fractions.size() != 10)
    throw DataError("assemble_stack: expected 10 land-cover fraction layers");
  if (weather.size() != kWeatherIndicators)
    throw DataError(strprintf("assemble_stack: weather vector has %zu entries, "
                              "expected %d",
                              weather.size(), kWeatherIndicators));
  auto check_layer = [&grid](const RasterLayer& layer, const char* what) {
    if (!(layer.grid == grid))
      throw DataError(std::string("assemble_stack: ") + what +
                      " is on a different grid");
    if (!layer.fully_valid())
      throw DataError(std::string("assemble_stack: ") + what +
                      " has invalid pixels; impute first");
  };
  for (size_t b = 0; b < bands.size(); ++b) check_layer(bands[b], "band");
  check_layer(dem, "DEM");
  for (const auto& f : fractions) check_layer(f, "land-cover fraction");

  const size_t pixels = size_t(grid.pixel_count());
  FeatureStack stack;
  stack.grid = grid;
  stack.date = date;
  stack.data.resize(size_t(kStackChannels) * pixels);

  int ch = 0;
  auto put_layer = [&](const RasterLayer& layer) {
    std::copy(layer.values.begin(), layer.values.end(), stack.channel(ch));
    ++ch;
  };
  auto put_constant = [&](float v) {
    std::fill_n(stack.channel(ch), pixels, v);
    ++ch;
  };

  for (const auto& b : bands) put_layer(b);
  put_layer(dem);
  for (const auto& f : fractions) put_layer(f);
  for (float w : weather) put_constant(w);
  auto [cx, cy] = coordinate_channels(grid);
  put_layer(cx);
  put_layer(cy);
  for (float t : temporal_channels(date, passage_time_seconds)) put_constant(t);

  for (float v : stack.data)
    if (!std::isfinite(v))
      throw DataError("assemble_stack: non-finite value in stack for " +
                      date_to_string(date));
  return stack;
}

NormStats compute_norm_stats(const std::vector<const FeatureStack*>& stacks) {
  if (stacks.empty())
    throw DataError("compute_norm_stats: empty training set");
  NormStats stats;
  for (int c = 0; c < kStackChannels; ++c) {
    double sum = 0.0, sum2 = 0.0;
    int64_t n = 0;
    for (const FeatureStack* s : stacks) {
      const int64_t pixels = s->grid.pixel_count();
      const float* p = s->channel(c);
      for (int64_t i = 0; i < pixels; ++i) {
        sum += p[i];
        sum2 += double(p[i]) * double(p[i]);
        ++n;
      }
    }
    const double mean = sum / double(n);
    const double var = std::max(0.0, sum2 / double(n) - mean * mean);
    stats.mean[size_t(c)] = float(mean);
    stats.std[size_t(c)] = std::max(float(std::sqrt(var)), NormStats::kEpsilon);
  }
  return stats;
}

void apply_norm(FeatureStack& stack, const NormStats& stats) {
  const int64_t pixels = stack.grid.pixel_count();
  for (int c = 0; c < kStackChannels; ++c) {
    float* p = stack.channel(c);
    const float m = stats.mean[size_t(c)], s = stats.std[size_t(c)];
    for (int64_t i = 0; i < pixels; ++i) p[i] = (p[i] - m) / s;
  }
}

void invert_norm(FeatureStack& stack, const NormStats& stats) {
  const int64_t pixels = stack.grid.pixel_count();
  for (int c = 0; c < kStackChannels; ++c) {
    float* p = stack.channel(c);
    const float m = stats.mean[size_t(c)], s = stats.std[size_t(c)];
    for (int64_t i = 0; i < pixels; ++i) p[i] = p[i] * s + m;
  }
}

namespace {

// Index map from output pixels to input pixels; -1 marks shifted-in pixels
// (zero features, invalid target).
struct PixelMap {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> src;

  static PixelMap identity(int64_t rows, int64_t cols) {
    PixelMap m{rows, cols, std::vector<int64_t>(size_t(rows * cols))};
    for (int64_t i = 0; i < rows * cols; ++i) m.src[size_t(i)] = i;
    return m;
  }

  // Compose with a further transform given by out(r,c) <- prev(sr,sc).
  template <typename Fn>
  void then(int64_t out_rows, int64_t out_cols, Fn&& src_of) {
    std::vector<int64_t> next(size_t(out_rows * out_cols), -1);
    for (int64_t r = 0; r < out_rows; ++r)
      for (int64_t c = 0; c < out_cols; ++c) {
        const auto [sr, sc] = src_of(r, c);
        if (sr < 0 || sr >= rows || sc < 0 || sc >= cols) continue;
        next[size_t(r * out_cols + c)] = src[size_t(sr * cols + sc)];
      }
    rows = out_rows;
    cols = out_cols;
    src = std::move(next);
  }
};

// One data pass through the composed map for every channel, the target
// values, and the target mask.
void apply_pixel_map(const PixelMap& map, FeatureStack& stack,
                     TargetRaster& target) {
  const size_t in_pixels = size_t(stack.grid.pixel_count());
  const size_t out_pixels = map.src.size();
  std::vector<float> new_data(size_t(kStackChannels) * out_pixels, 0.0f);
  std::vector<float> new_tv(out_pixels, 0.0f);
  std::vector<uint8_t> new_tm(out_pixels, 0);

  for (int ch = 0; ch < kStackChannels; ++ch) {
    const float* src_chan = stack.data.data() + size_t(ch) * in_pixels;
    float* dst_chan = new_data.data() + size_t(ch) * out_pixels;
    for (size_t i = 0; i < out_pixels; ++i)
      if (map.src[i] >= 0) dst_chan[i] = src_chan[size_t(map.src[i])];
  }
  for (size_t i = 0; i < out_pixels; ++i) {
    if (map.src[i] < 0) continue;
    new_tv[i] = target.values[size_t(map.src[i])];
    new_tm[i] = target.valid[size_t(map.src[i])];
  }

  stack.data = std::move(new_data);
  stack.grid.rows = map.rows;
  stack.grid.cols = map.cols;
  target.values = std::move(new_tv);
  target.valid = std::move(new_tm);
  target.grid = stack.grid;
}

}  // namespace

void augment(FeatureStack& stack, TargetRaster& target,
             const AugmentConfig& cfg, Rng& rng) {
  if (!(stack.grid == target.grid))
    throw DataError("augment: stack and target are on different grids");
  if (cfg.rot_prob * 3.0 > 1.0 + 1e-12)
    throw DataError("augment: rotation probabilities exceed 1");

  const bool hflip = rng.bernoulli(cfg.flip_prob);
  const bool vflip = rng.bernoulli(cfg.flip_prob);
  const double u = rng.uniform();
  int quarter_turns = 0;
  if (u < cfg.rot_prob)
    quarter_turns = 1;
  else if (u < 2.0 * cfg.rot_prob)
    quarter_turns = 2;
  else if (u < 3.0 * cfg.rot_prob)
    quarter_turns = 3;

  PixelMap map = PixelMap::identity(stack.grid.rows, stack.grid.cols);
  bool any = false;

  if (hflip) {
    const int64_t cols = map.cols;
    map.then(map.rows, map.cols, [cols](int64_t r, int64_t c) {
      return std::pair<int64_t, int64_t>{r, cols - 1 - c};
    });
    any = true;
  }
  if (vflip) {
    const int64_t rows = map.rows;
    map.then(map.rows, map.cols, [rows](int64_t r, int64_t c) {
      return std::pair<int64_t, int64_t>{rows - 1 - r, c};
    });
    any = true;
  }
  for (int k = 0; k < quarter_turns; ++k) {
    // 90 degrees counter-clockwise: out(r,c) = in(c, out_rows-1-r)
    const int64_t cols = map.cols;
    map.then(map.cols, map.rows, [cols](int64_t r, int64_t c) {
      return std::pair<int64_t, int64_t>{c, cols - 1 - r};
    });
    any = true;
  }
  if (cfg.shift_frac > 0.0) {
    const int64_t max_dr = int64_t(double(map.rows) * cfg.shift_frac);
    const int64_t max_dc = int64_t(double(map.cols) * cfg.shift_frac);
    const int64_t dr = max_dr > 0 ? rng.uniform_int(-max_dr, max_dr) : 0;
    const int64_t dc = max_dc > 0 ? rng.uniform_int(-max_dc, max_dc) : 0;
    if (dr != 0 || dc != 0) {
      map.then(map.rows, map.cols, [dr, dc](int64_t r, int64_t c) {
        return std::pair<int64_t, int64_t>{r - dr, c - dc};
      });
      any = true;
    }
  }
  if (cfg.crop_rows > 0 && cfg.crop_cols > 0) {
    if (cfg.crop_rows > map.rows || cfg.crop_cols > map.cols)
      throw DataError("augment: crop size larger than image");
    const int64_t r0 = rng.uniform_int(0, map.rows - cfg.crop_rows);
    const int64_t c0 = rng.uniform_int(0, map.cols - cfg.crop_cols);
    map.then(cfg.crop_rows, cfg.crop_cols, [r0, c0](int64_t r, int64_t c) {
      return std::pair<int64_t, int64_t>{r + r0, c + c0};
    });
    any = true;
  }

  if (any) apply_pixel_map(map, stack, target);
}

}  // namespace heatcast
