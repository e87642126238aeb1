#include "heatcast/bundle.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "heatcast/common.hpp"

namespace heatcast {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "bundle I/O assumes a little-endian host");
static_assert(sizeof(float) == 4, "bundle I/O requires 32-bit floats");

void write_bundle(const std::string& dir, const GridBundle& bundle) {
  const Grid& g = bundle.grid;
  if (bundle.channels.size() != bundle.bands.size())
    throw DataError("write_bundle: channel name count != band count");
  for (const auto& band : bundle.bands)
    if (int64_t(band.size()) != g.pixel_count())
      throw DataError("write_bundle: band size does not match grid");

  fs::create_directories(dir);

  json header;
  header["crs_id"] = g.bbox.crs_id;
  header["bbox"] = {{"min_x", g.bbox.min_x},
                    {"min_y", g.bbox.min_y},
                    {"max_x", g.bbox.max_x},
                    {"max_y", g.bbox.max_y}};
  header["resolution"] = g.resolution;
  header["rows"] = g.rows;
  header["cols"] = g.cols;
  header["channels"] = bundle.channels;
  header["nodata"] = bundle.nodata;

  {
    std::ofstream out(fs::path(dir) / "header.json", std::ios::binary);
    if (!out) throw DataError("write_bundle: cannot write header in " + dir);
    out << header.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "data.bin", std::ios::binary);
    if (!out) throw DataError("write_bundle: cannot write data in " + dir);
    for (const auto& band : bundle.bands)
      out.write(reinterpret_cast<const char*>(band.data()),
                std::streamsize(band.size() * sizeof(float)));
  }
}

GridBundle read_bundle(const std::string& dir) {
  json header;
  {
    std::ifstream in(fs::path(dir) / "header.json");
    if (!in) throw DataError("read_bundle: missing header.json in '" + dir + "'");
    try {
      in >> header;
    } catch (const json::exception& e) {
      throw DataError("read_bundle: bad header.json in '" + dir + "': " +
                      e.what());
    }
  }

  GridBundle bundle;
  try {
    Grid& g = bundle.grid;
    g.bbox.crs_id = header.at("crs_id").get<std::string>();
    const json& bb = header.at("bbox");
    g.bbox.min_x = bb.at("min_x").get<double>();
    g.bbox.min_y = bb.at("min_y").get<double>();
    g.bbox.max_x = bb.at("max_x").get<double>();
    g.bbox.max_y = bb.at("max_y").get<double>();
    g.resolution = header.at("resolution").get<double>();
    g.rows = header.at("rows").get<int64_t>();
    g.cols = header.at("cols").get<int64_t>();
    bundle.channels = header.at("channels").get<std::vector<std::string>>();
    bundle.nodata = header.at("nodata").get<float>();
  } catch (const json::exception& e) {
    throw DataError("read_bundle: header.json in '" + dir +
                    "' missing fields: " + e.what());
  }
  if (bundle.grid.rows < 1 || bundle.grid.cols < 1 || bundle.grid.resolution <= 0)
    throw DataError("read_bundle: bad grid in '" + dir + "'");

  const size_t pixels = size_t(bundle.grid.pixel_count());
  std::ifstream in(fs::path(dir) / "data.bin", std::ios::binary);
  if (!in) throw DataError("read_bundle: missing data.bin in '" + dir + "'");
  in.seekg(0, std::ios::end);
  const size_t bytes = size_t(in.tellg());
  in.seekg(0);
  if (bytes != bundle.channels.size() * pixels * sizeof(float))
    throw DataError(strprintf(
        "read_bundle: data.bin in '%s' has %zu bytes, expected %zu",
        dir.c_str(), bytes, bundle.channels.size() * pixels * sizeof(float)));
  for (size_t b = 0; b < bundle.channels.size(); ++b) {
    std::vector<float> band(pixels);
    in.read(reinterpret_cast<char*>(band.data()),
            std::streamsize(pixels * sizeof(float)));
    bundle.bands.push_back(std::move(band));
  }
  return bundle;
}

GridBundle bundle_from_layers(const std::vector<std::string>& names,
                              const std::vector<RasterLayer>& layers,
                              float nodata) {
  if (names.size() != layers.size() || layers.empty())
    throw DataError("bundle_from_layers: need matching names and layers");
  GridBundle bundle;
  bundle.grid = layers.front().grid;
  bundle.nodata = nodata;
  bundle.channels = names;
  for (const auto& layer : layers) {
    if (!(layer.grid == bundle.grid))
      throw DataError("bundle_from_layers: layers on different grids");
    std::vector<float> band = layer.values;
    for (size_t i = 0; i < band.size(); ++i)
      if (!layer.valid[i]) band[i] = nodata;
    bundle.bands.push_back(std::move(band));
  }
  return bundle;
}

std::vector<RasterLayer> layers_from_bundle(const GridBundle& bundle) {
  std::vector<RasterLayer> layers;
  for (const auto& band : bundle.bands) {
    RasterLayer layer(bundle.grid);
    layer.values = band;
    for (size_t i = 0; i < band.size(); ++i)
      layer.valid[i] = band[i] == bundle.nodata ? 0 : 1;
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace heatcast
