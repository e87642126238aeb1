#pragma once

#include <array>
#include <string>
#include <vector>

#include "heatcast/raster.hpp"

namespace heatcast {

inline constexpr int kUrbanAtlasClasses = 27;
inline constexpr int kLandCoverGroups = 10;

// 27 Urban Atlas classes grouped into 10 broader categories. The default
// grouping follows the Atlas top-level families; it can be overridden from
// a mapping file since the exact grouping is a modeling choice.
struct ClassMapping {
  std::array<int, kUrbanAtlasClasses> group_of{};
  std::array<std::string, kLandCoverGroups> group_names{};

  static ClassMapping urban_atlas_default();

  // Flat key-value file: "class.<code> = <group>" for all 27 codes,
  // optional "groups = name0,...,name9".
  static ClassMapping from_file(const std::string& path);
};

// Fraction of each land-cover group inside every target pixel footprint,
// computed from a finer class raster whose resolution divides the target's.
// Channels sum to 1 at every covered pixel; pixels with no fine coverage
// are marked invalid.
std::vector<RasterLayer> class_fractions(const ClassRaster& classes,
                                         const Grid& target,
                                         const ClassMapping& mapping);

}  // namespace heatcast
