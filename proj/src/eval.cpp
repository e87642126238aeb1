#include "heatcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "heatcast/bundle.hpp"
#include "heatcast/common.hpp"
#include "heatcast/csv.hpp"
#include "heatcast/image.hpp"
#include "heatcast/trainer.hpp"

namespace heatcast {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<double> mae(std::span<const float> pred,
                          const TargetRaster& target) {
  if (pred.size() != target.values.size())
    throw DataError("mae: prediction and target shapes differ");
  double abs_sum = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!target.valid[i]) continue;
    abs_sum += std::abs(double(pred[i]) - double(target.values[i]));
    ++count;
  }
  if (count == 0) return std::nullopt;
  return abs_sum / double(count);
}

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data, int year) {
  EvalReport report;
  report.model_name = to_string(ckpt.model.kind);
  report.resolution = data.grid.resolution;

  double abs_sum = 0.0;
  double daily_sum = 0.0;
  for (size_t idx : data.all_indices_in_years(year, year)) {
    const DayRecord& day = data.days[idx];
    if (!day.ok || day.target.valid_count() == 0) {
      ++report.skipped_days;
      continue;
    }
    Tensor<float> pred = predict_map(ckpt, day.stack);
    const auto day_mae = mae(
        std::span<const float>(pred.data(), size_t(pred.numel())), day.target);
    const int64_t nv = day.target.valid_count();
    report.days.push_back(DayScore{day.date, *day_mae, nv});
    report.valid_pixels += nv;
    abs_sum += *day_mae * double(nv);
    daily_sum += *day_mae;
  }
  if (report.days.empty())
    throw DataError(strprintf("evaluate: no day of year %d has a valid target "
                              "pixel",
                              year));
  report.aggregate_mae = abs_sum / double(report.valid_pixels);
  report.mean_of_daily_mae = daily_sum / double(report.days.size());
  return report;
}

void write_report_csv(const std::string& path,
                      const std::vector<EvalReport>& reports) {
  CsvTable table;
  table.header = {"resolution_m_px", "model",        "aggregate_mae_c",
                  "mean_daily_mae_c", "days_scored", "days_skipped",
                  "valid_pixels"};
  for (const EvalReport& r : reports) {
    table.rows.push_back({strprintf("%g", r.resolution), r.model_name,
                          strprintf("%.6f", r.aggregate_mae),
                          strprintf("%.6f", r.mean_of_daily_mae),
                          std::to_string(r.days.size()),
                          std::to_string(r.skipped_days),
                          std::to_string(r.valid_pixels)});
  }
  write_csv(path, table);
}

void write_per_day_csv(const std::string& path, const EvalReport& report) {
  CsvTable table;
  table.header = {"date", "mae_c", "valid_pixels"};
  for (const DayScore& d : report.days)
    table.rows.push_back({date_to_string(d.date), strprintf("%.6f", d.mae_c),
                          std::to_string(d.valid_pixels)});
  write_csv(path, table);
}

std::string render_report_table(const std::vector<EvalReport>& reports) {
  std::string out;
  out += strprintf("%-16s %-16s %-12s %-8s %-8s\n", "resolution m/px", "model",
                   "MAE degC", "days", "skipped");
  for (const EvalReport& r : reports)
    out += strprintf("%-16g %-16s %-12.4f %-8zu %-8d\n", r.resolution,
                     r.model_name.c_str(), r.aggregate_mae, r.days.size(),
                     r.skipped_days);
  return out;
}

void export_map(const std::string& dir, const Grid& grid,
                std::span<const float> map_c, const Date& date) {
  if (int64_t(map_c.size()) != grid.pixel_count())
    throw DataError("export_map: map size does not match grid");
  fs::create_directories(dir);

  GridBundle bundle;
  bundle.grid = grid;
  bundle.channels = {"t_max_pred"};
  bundle.bands.emplace_back(map_c.begin(), map_c.end());
  write_bundle(dir, bundle);

  float min_v = map_c[0], max_v = map_c[0];
  for (float v : map_c) {
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }

  const int64_t legend_h = 36;
  RgbImage img(grid.cols, grid.rows + legend_h, 16);
  const double span = double(max_v) - double(min_v);
  for (int64_t r = 0; r < grid.rows; ++r)
    for (int64_t c = 0; c < grid.cols; ++c) {
      const double t =
          span > 0.0 ? (double(map_c[size_t(grid.index(r, c))]) - min_v) / span
                     : 0.5;
      img.set(c, r, thermal_color(t));
    }
  // color bar
  for (int64_t c = 0; c < grid.cols; ++c) {
    const double t = grid.cols > 1 ? double(c) / double(grid.cols - 1) : 0.5;
    for (int64_t y = 0; y < 8; ++y)
      img.set(c, grid.rows + 2 + y, thermal_color(t));
  }
  draw_text(img, 2, grid.rows + 14,
            strprintf("MIN %.1fC", double(min_v)), {255, 255, 255});
  draw_text(img, 2, grid.rows + 25,
            strprintf("MAX %.1fC", double(max_v)), {255, 255, 255});
  write_png((fs::path(dir) / "map.png").string(), img);

  json legend;
  legend["date"] = date_to_string(date);
  legend["min_c"] = min_v;
  legend["max_c"] = max_v;
  std::ofstream out(fs::path(dir) / "legend.json", std::ios::binary);
  if (!out) throw DataError("export_map: cannot write legend in " + dir);
  out << legend.dump(2) << "\n";
}

}  // namespace heatcast
