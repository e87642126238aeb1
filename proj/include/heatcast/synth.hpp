#pragma once

#include <cstdint>
#include <string>

#include "heatcast/config.hpp"

namespace heatcast {

enum class SynthKind { planted_linear, smooth_field };

SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind kind);

// Deterministic synthetic-scene generator. Emits the raw inputs the real
// pipeline would ingest (per-day band scenes with validity holes, DEM,
// land-cover classes, weather CSV, station readings CSV) plus the ground
// truth used by oracle tests. The truth is a known function of the feature
// stack exactly as the pipeline builds it (impute, then resample), so a
// trained model can recover it up to the station noise.
struct SynthConfig {
  uint64_t seed = 42;
  int64_t grid_size = 64;     // pixels per side at the reference resolution
  double resolution = 100.0;  // m/px of the reference grid
  int train_days = 200;       // spread over 2018-2021
  int val_days = 40;          // 2022
  int test_days = 40;         // 2023
  int stations = 30;
  SynthKind kind = SynthKind::planted_linear;
  double noise_std = 0.2;       // degC on each station's daily max
  double hole_frac = 0.08;      // invalid fraction of each band scene
  double heavy_day_prob = 0.0;  // chance of a ~30%-hole day (gets rejected)
  int readings_per_day = 120;
  int min_readings = 100;
  int passage_seconds = 36000;  // 10:00, inside the morning window

  static SynthConfig from_config(const Config& cfg);
};

struct SynthResult {
  int days_total = 0;
  int heavy_days = 0;  // days generated with a heavy hole mask
};

SynthResult synth_dataset(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace heatcast
