#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "heatcast/dates.hpp"
#include "heatcast/raster.hpp"
#include "heatcast/rng.hpp"
#include "heatcast/stations.hpp"

namespace heatcast {

inline constexpr int kSentinelBands = 5;
inline constexpr int kWeatherIndicators = 15;
inline constexpr int kStackChannels = 39;

// Canonical channel order: 5 Sentinel-3 bands, DEM, 10 land-cover
// fractions, 15 weather scalars, 2 coordinate ramps, 6 temporal encodings.
struct ChannelLayout {
  std::vector<std::string> names;

  static ChannelLayout canonical(
      const std::array<std::string, 10>& landcover_names,
      const std::vector<std::string>& weather_names);

  int index_of(const std::string& name) const;
  size_t size() const { return names.size(); }
};

std::vector<std::string> default_weather_names();

// Per-day input tensor: channels * rows * cols, band-sequential.
struct FeatureStack {
  Grid grid;
  Date date;
  std::vector<float> data;

  int64_t channels() const { return kStackChannels; }
  float* channel(int c) { return data.data() + size_t(c) * size_t(grid.pixel_count()); }
  const float* channel(int c) const {
    return data.data() + size_t(c) * size_t(grid.pixel_count());
  }
};

// (sin, cos) of the phase angle 2*pi*value/period.
std::pair<double, double> circular_encode(double value, double period);

// doy/dow/tod encodings for the acquisition day and passage time.
std::array<float, 6> temporal_channels(const Date& date,
                                       int passage_time_seconds);

// Within-image ramps in [-1, 1]; a single-row or single-column axis is 0.
std::pair<RasterLayer, RasterLayer> coordinate_channels(const Grid& grid);

// Daily weather indicators, one row per day, no missing values.
struct WeatherSeries {
  std::vector<std::string> names;                // 15 indicator names
  std::map<int64_t, std::vector<float>> by_day;  // date serial -> 15 values

  const std::vector<float>& at(const Date& d) const;
};

WeatherSeries read_weather_csv(const std::string& path,
                               const std::vector<std::string>& expected_names);

FeatureStack assemble_stack(const std::vector<RasterLayer>& bands,
                            const RasterLayer& dem,
                            const std::vector<RasterLayer>& fractions,
                            const std::vector<float>& weather,
                            const Date& date, int passage_time_seconds,
                            const Grid& grid);

// Training-set z-score statistics with a floored standard deviation.
struct NormStats {
  std::array<float, kStackChannels> mean{};
  std::array<float, kStackChannels> std{};
  static constexpr float kEpsilon = 1e-6f;
};

NormStats compute_norm_stats(const std::vector<const FeatureStack*>& stacks);
void apply_norm(FeatureStack& stack, const NormStats& stats);
void invert_norm(FeatureStack& stack, const NormStats& stats);

// Geometric augmentation applied identically to every channel, the target
// values, and the target mask. Flips and 90-degree rotations permute
// pixels; shifts fill features with zero and invalidate shifted-in target
// pixels; crops cut a window. The sparse target is never interpolated.
struct AugmentConfig {
  double flip_prob = 0.5;       // per axis
  double rot_prob = 0.25;       // per nonzero quarter turn (3*rot_prob <= 1)
  double shift_frac = 0.05;     // max shift as a fraction of each side
  int64_t crop_rows = 0;        // 0 disables cropping
  int64_t crop_cols = 0;
};

void augment(FeatureStack& stack, TargetRaster& target,
             const AugmentConfig& cfg, Rng& rng);

}  // namespace heatcast
