#pragma once

#include <string>
#include <vector>

namespace heatcast {

// Minimal CSV: comma-separated, first row is the header, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace heatcast
