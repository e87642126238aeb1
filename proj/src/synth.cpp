#include "heatcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "heatcast/bundle.hpp"
#include "heatcast/common.hpp"
#include "heatcast/csv.hpp"
#include "heatcast/dates.hpp"
#include "heatcast/features.hpp"
#include "heatcast/landcover.hpp"
#include "heatcast/raster.hpp"
#include "heatcast/rng.hpp"
#include "heatcast/stations.hpp"

namespace heatcast {

namespace fs = std::filesystem;
using nlohmann::json;

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "planted-linear") return SynthKind::planted_linear;
  if (s == "smooth-field") return SynthKind::smooth_field;
  throw UsageError("unknown generator kind '" + s +
                   "' (expected planted-linear|smooth-field)");
}

std::string to_string(SynthKind kind) {
  return kind == SynthKind::planted_linear ? "planted-linear" : "smooth-field";
}

SynthConfig SynthConfig::from_config(const Config& cfg) {
  SynthConfig c;
  c.seed = uint64_t(cfg.get_int("synth.seed", 42));
  c.grid_size = cfg.get_int("synth.grid_size", 64);
  c.resolution = cfg.get_num("synth.resolution", 100.0);
  c.train_days = int(cfg.get_int("synth.train_days", 200));
  c.val_days = int(cfg.get_int("synth.val_days", 40));
  c.test_days = int(cfg.get_int("synth.test_days", 40));
  c.stations = int(cfg.get_int("synth.stations", 30));
  c.kind = synth_kind_from_string(
      cfg.get_str("synth.kind", "planted-linear"));
  c.noise_std = cfg.get_num("synth.noise_std", 0.2);
  c.hole_frac = cfg.get_num("synth.hole_frac", 0.08);
  c.heavy_day_prob = cfg.get_num("synth.heavy_day_prob", 0.0);
  c.readings_per_day = int(cfg.get_int("synth.readings_per_day", 120));
  c.min_readings = int(cfg.get_int("synth.min_readings", 100));
  c.passage_seconds = int(cfg.get_int("synth.passage_seconds", 36000));
  return c;
}

namespace {

enum StreamTag : uint64_t {
  kTagDem = 10,
  kTagLandcover = 11,
  kTagBandField = 12,
  kTagStations = 13,
  kTagWeather = 14,
  kTagHoles = 15,
  kTagBandNoise = 16,
  kTagStationNoise = 17,
  kTagTruth = 18,
};

// Sum of Gaussian bumps, standardized to mean 0 / std 1.
std::vector<float> smooth_field(const Grid& g, Rng& rng, int bumps) {
  const int64_t pixels = g.pixel_count();
  std::vector<double> f(size_t(pixels), 0.0);
  const double extent = std::max(g.bbox.width(), g.bbox.height());
  for (int k = 0; k < bumps; ++k) {
    const double cx = rng.uniform(g.bbox.min_x, g.bbox.max_x);
    const double cy = rng.uniform(g.bbox.min_y, g.bbox.max_y);
    const double sigma = rng.uniform(0.12, 0.35) * extent;
    const double amp = rng.normal(0.0, 1.0);
    for (int64_t r = 0; r < g.rows; ++r)
      for (int64_t c = 0; c < g.cols; ++c) {
        const double dx = g.x_center(c) - cx;
        const double dy = g.y_center(r) - cy;
        f[g.index(r, c)] += amp * std::exp(-(dx * dx + dy * dy) /
                                           (2.0 * sigma * sigma));
      }
  }
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= double(pixels);
  double var = 0.0;
  for (double v : f) var += (v - mean) * (v - mean);
  var /= double(pixels);
  const double istd = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  std::vector<float> out(static_cast<size_t>(pixels));
  for (int64_t i = 0; i < pixels; ++i)
    out[size_t(i)] = float((f[size_t(i)] - mean) * istd);
  return out;
}

std::vector<Date> schedule_days(int n, const Date& first, const Date& last) {
  const int64_t a = date_serial(first), b = date_serial(last);
  if (n > int(b - a + 1))
    throw UsageError(strprintf("synth: cannot place %d days between %s and %s",
                               n, date_to_string(first).c_str(),
                               date_to_string(last).c_str()));
  std::set<int64_t> serials;
  for (int i = 0; i < n; ++i) {
    int64_t s = n == 1 ? a : a + int64_t(std::llround(double(i) * double(b - a) /
                                                       double(n - 1)));
    while (serials.count(s)) ++s;  // spacing guarantees room to the right
    serials.insert(s);
  }
  std::vector<Date> out;
  for (int64_t s : serials) out.push_back(date_from_serial(s));
  return out;
}

double season_of(const Date& d) {
  return -std::cos(2.0 * M_PI * double(day_of_year(d) - 20) /
                   double(days_in_year(d.year)));
}

constexpr double kBandCenter[kSentinelBands] = {18.0, 12.0, 22.0, 16.0, 20.0};
constexpr double kBandScale[kSentinelBands] = {2.0, 3.0, 2.5, 1.5, 2.0};

// Smooth-field truth coefficients (band0 is standardized with the known
// center/scale above).
constexpr double kSmoothBase = 2.0;
constexpr double kSmoothWeather0 = 0.85;
constexpr double kSmoothAmpGain = 2.2;
constexpr double kSmoothSquareGain = 0.8;
constexpr double kSmoothLandcover[kLandCoverGroups] = {
    2.2, 1.4, 1.8, 1.0, 0.6, 0.4, -1.2, -0.6, -1.8, -2.4};

std::vector<float> planted_weights(Rng& rng) {
  std::vector<double> w;
  const double bands[] = {0.35, -0.2, 0.25, 0.15, -0.1};
  w.insert(w.end(), std::begin(bands), std::end(bands));
  w.push_back(-0.004);  // DEM lapse
  const double fractions[] = {2.0, 1.2, 1.5, 0.8, 0.5,
                              0.3, -1.0, -0.5, -1.5, -2.0};
  w.insert(w.end(), std::begin(fractions), std::end(fractions));
  const double weather[] = {0.35,  0.08, 0.05,  0.04,  -0.01,
                            -0.03, 0.01, -0.02, 0.0005, 0.02,
                            -0.005, 0.01, 0.002, 0.05,  0.06};
  w.insert(w.end(), std::begin(weather), std::end(weather));
  const double coords[] = {0.6, -0.4};
  w.insert(w.end(), std::begin(coords), std::end(coords));
  const double temporal[] = {0.4, -2.2, 0.15, 0.1, 0.05, -0.05};
  w.insert(w.end(), std::begin(temporal), std::end(temporal));

  std::vector<float> out;
  out.reserve(w.size());
  for (double v : w) out.push_back(float(v * rng.uniform(0.95, 1.05)));
  return out;
}

std::vector<float> weather_row(const Date& d, Rng rng, SynthKind kind) {
  const double season = season_of(d);
  const double amp =
      1.0 + 0.5 * std::sin(2.0 * M_PI * double(day_of_year(d)) /
                               double(days_in_year(d.year)) +
                           1.3);
  std::vector<double> w(kWeatherIndicators);
  w[0] = 14.0 + 12.0 * season + rng.normal(0.0, 1.2);
  w[1] = kind == SynthKind::smooth_field ? amp
                                         : 8.0 + 10.0 * season + rng.normal(0.0, 1.2);
  w[2] = (w[0] + w[1]) / 2.0 + rng.normal(0.0, 0.8);
  w[3] = 6.0 + 8.0 * season + rng.normal(0.0, 1.5);
  w[4] = 60.0 - 15.0 * season + rng.normal(0.0, 6.0);
  w[5] = std::max(0.0, rng.normal(1.5, 2.5));
  w[6] = 15.0 + rng.normal(0.0, 5.0);
  w[7] = 8.0 + rng.normal(0.0, 3.0);
  w[8] = rng.uniform(0.0, 360.0);
  w[9] = 1013.0 + rng.normal(0.0, 7.0);
  w[10] = std::clamp(50.0 - 30.0 * season + rng.normal(0.0, 20.0), 0.0, 100.0);
  w[11] = 12.0 + rng.normal(0.0, 4.0);
  w[12] = std::max(0.0, 180.0 + 140.0 * season + rng.normal(0.0, 30.0));
  w[13] = w[12] * 0.024 + rng.normal(0.0, 0.5);
  w[14] = std::max(0.0, 5.0 + 4.0 * season + rng.normal(0.0, 1.0));
  std::vector<float> out(w.begin(), w.end());
  return out;
}

}  // namespace

SynthResult synth_dataset(const SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.grid_size < 8) throw UsageError("synth: grid_size must be >= 8");
  if (cfg.stations < 1) throw UsageError("synth: need at least one station");
  if (cfg.readings_per_day < cfg.min_readings)
    log_warn("synth: readings_per_day below min_readings; every station-day "
             "will be dropped");

  BoundingBox bbox;
  bbox.min_x = 0.0;
  bbox.min_y = 0.0;
  bbox.max_x = double(cfg.grid_size) * cfg.resolution;
  bbox.max_y = double(cfg.grid_size) * cfg.resolution;
  bbox.crs_id = "EPSG:32632";

  const Grid ref = make_grid(bbox, cfg.resolution);
  const Grid band_grid = make_grid(bbox, 2.0 * cfg.resolution);
  const Grid lc_grid = make_grid(bbox, cfg.resolution / 10.0);

  // Static scenery.
  Rng dem_rng = Rng::stream(cfg.seed, {kTagDem});
  RasterLayer dem(ref);
  {
    const auto field = smooth_field(ref, dem_rng, 7);
    for (size_t i = 0; i < dem.values.size(); ++i)
      dem.values[i] = 250.0f + 120.0f * field[i];
  }

  ClassRaster landcover;
  landcover.grid = lc_grid;
  landcover.classes.resize(size_t(lc_grid.pixel_count()));
  {
    Rng lc_rng = Rng::stream(cfg.seed, {kTagLandcover});
    const int seeds = 40;
    std::vector<double> sx(seeds), sy(seeds);
    std::vector<uint8_t> code(seeds);
    for (int s = 0; s < seeds; ++s) {
      sx[size_t(s)] = lc_rng.uniform(bbox.min_x, bbox.max_x);
      sy[size_t(s)] = lc_rng.uniform(bbox.min_y, bbox.max_y);
      code[size_t(s)] = uint8_t(lc_rng.uniform_int(0, kUrbanAtlasClasses - 1));
    }
    for (int64_t r = 0; r < lc_grid.rows; ++r)
      for (int64_t c = 0; c < lc_grid.cols; ++c) {
        const double x = lc_grid.x_center(c), y = lc_grid.y_center(r);
        int best = 0;
        double best_d = 1e300;
        for (int s = 0; s < seeds; ++s) {
          const double d = (x - sx[size_t(s)]) * (x - sx[size_t(s)]) +
                           (y - sy[size_t(s)]) * (y - sy[size_t(s)]);
          if (d < best_d) {
            best_d = d;
            best = s;
          }
        }
        landcover.classes[lc_grid.index(r, c)] = code[size_t(best)];
      }
  }

  std::vector<std::vector<float>> band_fields;
  for (int k = 0; k < kSentinelBands; ++k) {
    Rng rng = Rng::stream(cfg.seed, {kTagBandField, uint64_t(k)});
    band_fields.push_back(smooth_field(band_grid, rng, 6));
  }

  // Station positions, fixed across the whole period.
  Rng st_rng = Rng::stream(cfg.seed, {kTagStations});
  std::vector<double> station_x(size_t(cfg.stations)),
      station_y(size_t(cfg.stations));
  for (int s = 0; s < cfg.stations; ++s) {
    station_x[size_t(s)] =
        st_rng.uniform(bbox.min_x + 0.02 * bbox.width(),
                       bbox.max_x - 0.02 * bbox.width());
    station_y[size_t(s)] =
        st_rng.uniform(bbox.min_y + 0.02 * bbox.height(),
                       bbox.max_y - 0.02 * bbox.height());
  }

  const ClassMapping mapping = ClassMapping::urban_atlas_default();
  const std::vector<RasterLayer> fractions =
      class_fractions(landcover, ref, mapping);

  Rng truth_rng = Rng::stream(cfg.seed, {kTagTruth});
  const std::vector<float> weights = planted_weights(truth_rng);
  const float bias = 8.0f;

  std::vector<Date> dates = schedule_days(cfg.train_days, Date{2018, 1, 1},
                                          Date{2021, 12, 31});
  {
    auto val = schedule_days(cfg.val_days, Date{2022, 1, 10}, Date{2022, 12, 20});
    auto test =
        schedule_days(cfg.test_days, Date{2023, 1, 10}, Date{2023, 12, 20});
    dates.insert(dates.end(), val.begin(), val.end());
    dates.insert(dates.end(), test.begin(), test.end());
  }

  // Output layout.
  const fs::path root(out_dir);
  fs::create_directories(root / "raw" / "bands");
  fs::create_directories(root / "truth");

  write_bundle((root / "raw" / "dem").string(),
               bundle_from_layers({"DEM"}, {dem}));
  {
    GridBundle lc_bundle;
    lc_bundle.grid = lc_grid;
    lc_bundle.channels = {"class"};
    std::vector<float> codes(landcover.classes.begin(), landcover.classes.end());
    lc_bundle.bands.push_back(std::move(codes));
    write_bundle((root / "raw" / "landcover").string(), lc_bundle);
  }

  std::ofstream stations_csv(root / "raw" / "stations.csv", std::ios::binary);
  if (!stations_csv)
    throw DataError("synth: cannot write stations.csv in " + out_dir);
  stations_csv << "station_id,x,y,timestamp,temperature_c\n";

  CsvTable weather_table;
  weather_table.header.push_back("date");
  for (const auto& n : default_weather_names())
    weather_table.header.push_back(n);

  SynthResult result;
  result.days_total = int(dates.size());

  const size_t ref_pixels = size_t(ref.pixel_count());
  const double daily_range = 8.0;  // diurnal spread below the daily max
  const int peak_index =
      (14 * 3600) / (86400 / std::max(1, cfg.readings_per_day));

  for (const Date& date : dates) {
    const uint64_t serial = uint64_t(date_serial(date));
    const double season = season_of(date);

    // Shared validity mask for the day's 5-band scene.
    Rng hole_rng = Rng::stream(cfg.seed, {kTagHoles, serial});
    const bool heavy = hole_rng.bernoulli(cfg.heavy_day_prob);
    if (heavy) ++result.heavy_days;
    const double hole_rate = heavy ? 0.30 : cfg.hole_frac;
    std::vector<uint8_t> scene_valid(size_t(band_grid.pixel_count()));
    for (auto& v : scene_valid) v = hole_rng.bernoulli(hole_rate) ? 0 : 1;

    std::vector<RasterLayer> bands_full;  // before masking, fully valid
    for (int k = 0; k < kSentinelBands; ++k) {
      Rng noise = Rng::stream(cfg.seed, {kTagBandNoise, serial, uint64_t(k)});
      RasterLayer layer(band_grid);
      for (size_t i = 0; i < layer.values.size(); ++i)
        layer.values[i] = float(
            kBandCenter[k] +
            kBandScale[k] * (0.8 * double(band_fields[size_t(k)][i]) +
                             0.45 * season + noise.normal(0.0, 0.10)));
      bands_full.push_back(std::move(layer));
    }

    // Raw scene on disk carries the holes.
    {
      std::vector<RasterLayer> masked = bands_full;
      for (auto& layer : masked) layer.valid = scene_valid;
      write_bundle((root / "raw" / "bands" / date_to_string(date)).string(),
                   bundle_from_layers({"F1", "F2", "S7", "S8", "S9"}, masked));
    }

    // The truth is defined on the stack exactly as the pipeline builds it:
    // impute at native resolution, then resample. Days whose scene fails
    // the validity threshold never enter training or evaluation; their
    // station readings are generated from the unmasked fields instead.
    std::vector<RasterLayer> band_layers;
    bool rejected = false;
    for (int k = 0; k < kSentinelBands && !rejected; ++k) {
      RasterLayer masked = bands_full[size_t(k)];
      masked.valid = scene_valid;
      auto imputed = impute(masked);
      if (!imputed)
        rejected = true;
      else
        band_layers.push_back(std::move(*imputed));
    }
    if (rejected) band_layers = bands_full;

    std::vector<RasterLayer> bands_ref;
    for (const auto& layer : band_layers)
      bands_ref.push_back(resample_bilinear(layer, ref));

    const std::vector<float> weather =
        weather_row(date, Rng::stream(cfg.seed, {kTagWeather, serial}), cfg.kind);
    weather_table.rows.push_back({date_to_string(date)});
    for (float v : weather)
      weather_table.rows.back().push_back(strprintf("%.9g", double(v)));

    FeatureStack stack = assemble_stack(bands_ref, dem, fractions, weather,
                                        date, cfg.passage_seconds, ref);

    std::vector<float> truth(ref_pixels, 0.0f);
    if (cfg.kind == SynthKind::planted_linear) {
      for (size_t i = 0; i < ref_pixels; ++i) {
        double acc = double(bias);
        for (int c = 0; c < kStackChannels; ++c)
          acc += double(weights[size_t(c)]) *
                 double(stack.data[size_t(c) * ref_pixels + i]);
        truth[i] = float(acc);
      }
    } else {
      const double amp = double(weather[1]);
      const double base = kSmoothBase + kSmoothWeather0 * double(weather[0]);
      for (size_t i = 0; i < ref_pixels; ++i) {
        const double b0n =
            (double(stack.data[i]) - kBandCenter[0]) / kBandScale[0];
        double acc = base + kSmoothAmpGain * amp * b0n +
                     kSmoothSquareGain * (b0n * b0n - 1.0);
        for (int g = 0; g < kLandCoverGroups; ++g)
          acc += kSmoothLandcover[g] *
                 double(stack.data[size_t(6 + g) * ref_pixels + i]);
        truth[i] = float(acc);
      }
    }

    if (!rejected) {
      GridBundle truth_bundle;
      truth_bundle.grid = ref;
      truth_bundle.channels = {"t_max_true"};
      truth_bundle.bands.push_back(truth);
      write_bundle((root / "truth" / date_to_string(date)).string(),
                   truth_bundle);
    }

    // Station readings: a diurnal curve whose maximum (at 14:00) equals the
    // pixel truth plus the day's station noise draw.
    const int readings = cfg.readings_per_day;
    const int step = 86400 / std::max(1, readings);
    for (int s = 0; s < cfg.stations; ++s) {
      Rng noise =
          Rng::stream(cfg.seed, {kTagStationNoise, serial, uint64_t(s)});
      const auto pixel = point_to_pixel(ref, station_x[size_t(s)],
                                        station_y[size_t(s)]);
      const float t_max =
          truth[ref.index(pixel->first, pixel->second)] +
          float(noise.normal(0.0, cfg.noise_std));
      for (int i = 0; i < readings; ++i) {
        const int tod = i * step;
        const double phase =
            2.0 * M_PI * double(i - peak_index) / double(readings);
        const double temp =
            double(t_max) - daily_range * (1.0 - std::cos(phase)) / 2.0;
        stations_csv << "st" << strprintf("%03d", s) << ','
                     << strprintf("%.3f", station_x[size_t(s)]) << ','
                     << strprintf("%.3f", station_y[size_t(s)]) << ','
                     << timestamp_to_string(Timestamp{date, tod}) << ','
                     << strprintf("%.5f", temp) << '\n';
      }
    }
  }
  stations_csv.close();
  write_csv((root / "raw" / "weather.csv").string(), weather_table);

  // Ground-truth bookkeeping for oracle tests; never read by the pipeline.
  {
    json params;
    params["kind"] = to_string(cfg.kind);
    params["seed"] = cfg.seed;
    params["noise_std"] = cfg.noise_std;
    if (cfg.kind == SynthKind::planted_linear) {
      params["weights"] = weights;
      params["bias"] = bias;
    } else {
      params["base"] = kSmoothBase;
      params["weather0_gain"] = kSmoothWeather0;
      params["amp_gain"] = kSmoothAmpGain;
      params["square_gain"] = kSmoothSquareGain;
      params["landcover_gain"] = std::vector<double>(
          std::begin(kSmoothLandcover), std::end(kSmoothLandcover));
    }
    std::ofstream out(root / "truth_params.json", std::ios::binary);
    out << params.dump(2) << "\n";
  }

  // Ready-to-run pipeline config with paths relative to this file.
  {
    std::ofstream out(root / "run-config.txt", std::ios::binary);
    out << "# generated by heatcast synth\n";
    out << "data.bands_dir = raw/bands\n";
    out << "data.dem = raw/dem\n";
    out << "data.landcover = raw/landcover\n";
    out << "data.weather_csv = raw/weather.csv\n";
    out << "data.stations_csv = raw/stations.csv\n";
    out << "data.passage_seconds = " << cfg.passage_seconds << "\n";
    out << "grid.crs_id = " << bbox.crs_id << "\n";
    out << "grid.min_x = " << strprintf("%.9g", bbox.min_x) << "\n";
    out << "grid.min_y = " << strprintf("%.9g", bbox.min_y) << "\n";
    out << "grid.max_x = " << strprintf("%.9g", bbox.max_x) << "\n";
    out << "grid.max_y = " << strprintf("%.9g", bbox.max_y) << "\n";
    out << "grid.resolution = " << strprintf("%.9g", cfg.resolution) << "\n";
    out << "stations.min_readings = " << cfg.min_readings << "\n";
  }
  return result;
}

}  // namespace heatcast
