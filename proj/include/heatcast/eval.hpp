#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatcast/checkpoint.hpp"
#include "heatcast/dataset.hpp"

namespace heatcast {

// Mean absolute error in degC over the target's valid pixels; nullopt when
// the target has none (the day is skipped, its values are never read).
std::optional<double> mae(std::span<const float> pred,
                          const TargetRaster& target);

struct DayScore {
  Date date;
  double mae_c = 0.0;
  int64_t valid_pixels = 0;
};

struct EvalReport {
  std::string model_name;
  double resolution = 0.0;  // m/px
  std::vector<DayScore> days;
  int skipped_days = 0;
  int64_t valid_pixels = 0;
  // Canonical aggregate: pooled over all valid (pixel, day) pairs.
  double aggregate_mae = 0.0;
  // Mean of per-day MAEs, reported alongside.
  double mean_of_daily_mae = 0.0;
};

// Score the checkpoint on every day of `year`; days rejected at build time
// or with no station pixel count as skipped.
EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data, int year);

// report.csv: one summary row per report (mirrors the per-resolution table).
void write_report_csv(const std::string& path,
                      const std::vector<EvalReport>& reports);
// per_day.csv for a single report.
void write_per_day_csv(const std::string& path, const EvalReport& report);
// Human-readable table, one row per resolution.
std::string render_report_table(const std::vector<EvalReport>& reports);

// Grid bundle with the temperature band plus a color-ramped PNG annotated
// with the min/max predicted degC (also written to legend.json).
void export_map(const std::string& dir, const Grid& grid,
                std::span<const float> map_c, const Date& date);

}  // namespace heatcast
