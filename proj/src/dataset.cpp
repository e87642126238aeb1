#include "heatcast/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "heatcast/bundle.hpp"
#include "heatcast/common.hpp"

namespace heatcast {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<size_t> Dataset::indices_in_years(int year_min, int year_max) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < days.size(); ++i)
    if (days[i].ok && days[i].date.year >= year_min &&
        days[i].date.year <= year_max)
      out.push_back(i);
  return out;
}

std::vector<size_t> Dataset::all_indices_in_years(int year_min,
                                                  int year_max) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < days.size(); ++i)
    if (days[i].date.year >= year_min && days[i].date.year <= year_max)
      out.push_back(i);
  return out;
}

void Dataset::save(const std::string& dir) const {
  fs::create_directories(dir);

  json manifest;
  manifest["grid"] = {{"crs_id", grid.bbox.crs_id},
                      {"min_x", grid.bbox.min_x},
                      {"min_y", grid.bbox.min_y},
                      {"max_x", grid.bbox.max_x},
                      {"max_y", grid.bbox.max_y},
                      {"resolution", grid.resolution},
                      {"rows", grid.rows},
                      {"cols", grid.cols}};
  manifest["layout"] = layout_names;
  manifest["passage_seconds"] = passage_seconds;

  json day_list = json::array();
  for (const auto& day : days) {
    json entry;
    entry["date"] = date_to_string(day.date);
    entry["status"] = day.status;
    if (day.ok) entry["valid_pixels"] = day.target.valid_count();
    day_list.push_back(entry);
  }
  manifest["days"] = day_list;

  {
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw DataError("Dataset::save: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
  }

  for (const auto& day : days) {
    if (!day.ok) continue;
    const std::string name = date_to_string(day.date);

    GridBundle stack_bundle;
    stack_bundle.grid = grid;
    stack_bundle.channels = layout_names;
    const size_t pixels = size_t(grid.pixel_count());
    for (int c = 0; c < kStackChannels; ++c)
      stack_bundle.bands.emplace_back(day.stack.channel(c),
                                      day.stack.channel(c) + pixels);
    write_bundle((fs::path(dir) / "stacks" / name).string(), stack_bundle);

    GridBundle target_bundle;
    target_bundle.grid = grid;
    target_bundle.channels = {"t_max", "valid"};
    std::vector<float> tvals = day.target.values;
    std::vector<float> tmask(pixels);
    for (size_t i = 0; i < pixels; ++i) {
      tmask[i] = day.target.valid[i] ? 1.0f : 0.0f;
      if (!day.target.valid[i]) tvals[i] = target_bundle.nodata;
    }
    target_bundle.bands.push_back(std::move(tvals));
    target_bundle.bands.push_back(std::move(tmask));
    write_bundle((fs::path(dir) / "targets" / name).string(), target_bundle);
  }
}

Dataset Dataset::load(const std::string& dir) {
  json manifest;
  {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in)
      throw DataError("Dataset::load: missing manifest.json in '" + dir + "'");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw DataError("Dataset::load: bad manifest in '" + dir + "': " +
                      e.what());
    }
  }

  Dataset data;
  try {
    const json& g = manifest.at("grid");
    data.grid.bbox.crs_id = g.at("crs_id").get<std::string>();
    data.grid.bbox.min_x = g.at("min_x").get<double>();
    data.grid.bbox.min_y = g.at("min_y").get<double>();
    data.grid.bbox.max_x = g.at("max_x").get<double>();
    data.grid.bbox.max_y = g.at("max_y").get<double>();
    data.grid.resolution = g.at("resolution").get<double>();
    data.grid.rows = g.at("rows").get<int64_t>();
    data.grid.cols = g.at("cols").get<int64_t>();
    data.layout_names = manifest.at("layout").get<std::vector<std::string>>();
    data.passage_seconds = manifest.at("passage_seconds").get<int>();

    for (const json& entry : manifest.at("days")) {
      DayRecord day;
      day.date = date_from_string(entry.at("date").get<std::string>());
      day.status = entry.at("status").get<std::string>();
      day.ok = day.status == "ok";
      if (day.ok) {
        const std::string name = date_to_string(day.date);
        GridBundle stack_bundle =
            read_bundle((fs::path(dir) / "stacks" / name).string());
        if (stack_bundle.channels != data.layout_names)
          throw DataError("Dataset::load: stack channels mismatch for " + name);
        if (!(stack_bundle.grid == data.grid))
          throw DataError("Dataset::load: stack grid mismatch for " + name);
        day.stack.grid = data.grid;
        day.stack.date = day.date;
        const size_t pixels = size_t(data.grid.pixel_count());
        day.stack.data.resize(size_t(kStackChannels) * pixels);
        for (int c = 0; c < kStackChannels; ++c)
          std::copy(stack_bundle.bands[size_t(c)].begin(),
                    stack_bundle.bands[size_t(c)].end(), day.stack.channel(c));

        GridBundle target_bundle =
            read_bundle((fs::path(dir) / "targets" / name).string());
        if (target_bundle.channels.size() != 2 ||
            target_bundle.channels[0] != "t_max" ||
            target_bundle.channels[1] != "valid")
          throw DataError("Dataset::load: bad target bundle for " + name);
        day.target = TargetRaster(data.grid, day.date);
        day.target.values = target_bundle.bands[0];
        for (size_t i = 0; i < pixels; ++i)
          day.target.valid[i] = target_bundle.bands[1][i] > 0.5f ? 1 : 0;
      }
      data.days.push_back(std::move(day));
    }
  } catch (const json::exception& e) {
    throw DataError("Dataset::load: manifest in '" + dir +
                    "' missing fields: " + e.what());
  }
  return data;
}

}  // namespace heatcast
