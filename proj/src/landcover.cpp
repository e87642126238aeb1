#include "heatcast/landcover.hpp"

#include <cmath>

#include "heatcast/common.hpp"
#include "heatcast/config.hpp"

namespace heatcast {

ClassMapping ClassMapping::urban_atlas_default() {
  ClassMapping m;
  m.group_names = {"lc_dense_urban",   "lc_low_density_urban",
                   "lc_industrial_commercial", "lc_roads_rail",
                   "lc_port_airport",  "lc_extraction_construction",
                   "lc_urban_green",   "lc_agricultural",
                   "lc_forest_natural", "lc_water"};
  auto assign = [&m](std::initializer_list<int> codes, int group) {
    for (int c : codes) m.group_of[size_t(c)] = group;
  };
  assign({0, 1}, 0);               // continuous + dense discontinuous fabric
  assign({2, 3, 4, 5}, 1);         // medium/low/very-low density, isolated
  assign({6}, 2);                  // industrial, commercial, public units
  assign({7, 8, 9}, 3);            // fast transit, other roads, railways
  assign({10, 11}, 4);             // ports, airports
  assign({12, 13, 14}, 5);         // extraction, construction, no current use
  assign({15, 16}, 6);             // green urban, sports and leisure
  assign({17, 18, 19, 20, 21}, 7); // arable, permanent, pastures, mixed, orchards
  assign({22, 23, 24, 25}, 8);     // forests, herbaceous, open spaces, wetlands
  assign({26}, 9);                 // water
  return m;
}

ClassMapping ClassMapping::from_file(const std::string& path) {
  Config cfg = Config::from_file(path);
  ClassMapping m = urban_atlas_default();
  auto names = cfg.get_list("groups");
  if (!names.empty()) {
    if (names.size() != kLandCoverGroups)
      throw DataError(strprintf("class mapping '%s': expected %d group names",
                                path.c_str(), kLandCoverGroups));
    for (int g = 0; g < kLandCoverGroups; ++g)
      m.group_names[size_t(g)] = names[size_t(g)];
  }
  for (int c = 0; c < kUrbanAtlasClasses; ++c) {
    const std::string key = "class." + std::to_string(c);
    if (!cfg.has(key)) continue;
    const int64_t g = cfg.get_int(key, -1);
    if (g < 0 || g >= kLandCoverGroups)
      throw DataError(strprintf("class mapping '%s': class %d mapped to bad "
                                "group %lld",
                                path.c_str(), c, (long long)g));
    m.group_of[size_t(c)] = int(g);
  }
  return m;
}

std::vector<RasterLayer> class_fractions(const ClassRaster& classes,
                                         const Grid& target,
                                         const ClassMapping& mapping) {
  const Grid& fine = classes.grid;
  const double ratio = target.resolution / fine.resolution;
  const int64_t factor = int64_t(std::llround(ratio));
  if (factor < 1 || std::abs(ratio - double(factor)) > 1e-9 * ratio)
    throw DataError(strprintf(
        "class_fractions: class raster resolution %g does not evenly divide "
        "target resolution %g",
        fine.resolution, target.resolution));
  const double tol = 1e-6 * target.resolution;
  if (std::abs(fine.bbox.min_x - target.bbox.min_x) > tol ||
      std::abs(fine.bbox.max_y - target.bbox.max_y) > tol)
    throw DataError("class_fractions: grids are not aligned at the north-west "
                    "corner");

  std::vector<RasterLayer> out;
  out.reserve(kLandCoverGroups);
  for (int g = 0; g < kLandCoverGroups; ++g)
    out.emplace_back(target, 0.0f, true);

  for (int64_t r = 0; r < target.rows; ++r) {
    const int64_t fr0 = r * factor;
    const int64_t fr1 = std::min(fr0 + factor, fine.rows);
    for (int64_t c = 0; c < target.cols; ++c) {
      const int64_t fc0 = c * factor;
      const int64_t fc1 = std::min(fc0 + factor, fine.cols);
      int64_t counts[kLandCoverGroups] = {0};
      int64_t total = 0;
      for (int64_t fr = fr0; fr < fr1; ++fr)
        for (int64_t fc = fc0; fc < fc1; ++fc) {
          const uint8_t code = classes.at(fr, fc);
          if (code >= kUrbanAtlasClasses)
            throw DataError(strprintf("class_fractions: unmapped class code %d "
                                      "at (%lld,%lld)",
                                      int(code), (long long)fr, (long long)fc));
          ++counts[mapping.group_of[code]];
          ++total;
        }
      if (total == 0) {
        for (int g = 0; g < kLandCoverGroups; ++g) out[size_t(g)].set(r, c, 0.0f, false);
      } else {
        for (int g = 0; g < kLandCoverGroups; ++g)
          out[size_t(g)].set(r, c, float(double(counts[g]) / double(total)));
      }
    }
  }
  return out;
}

}  // namespace heatcast
