#pragma once

#include <string>
#include <vector>

#include "heatcast/features.hpp"
#include "heatcast/stations.hpp"

namespace heatcast {

// One day of the built dataset. Days rejected at build time (imputation
// below threshold) keep their status but carry no stack.
struct DayRecord {
  Date date;
  bool ok = false;
  std::string status;  // "ok" or a rejection reason
  FeatureStack stack;
  TargetRaster target;
};

struct Dataset {
  Grid grid;
  std::vector<std::string> layout_names;
  int passage_seconds = 36000;
  std::vector<DayRecord> days;

  // Usable (non-rejected) days whose calendar year is in [year_min, year_max].
  std::vector<size_t> indices_in_years(int year_min, int year_max) const;
  // Every day in the year range, including rejected ones.
  std::vector<size_t> all_indices_in_years(int year_min, int year_max) const;

  void save(const std::string& dir) const;
  static Dataset load(const std::string& dir);
};

}  // namespace heatcast
