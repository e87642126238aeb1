#pragma once

#include <map>
#include <string>
#include <vector>

namespace heatcast {

// Flat key = value run configuration. '#' starts a comment, blank lines are
// skipped, later assignments win. Keys are dotted lowercase
// (e.g. "train.batch_size"); see docs/run-config.example for the full list.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  double get_num(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Comma-separated value lists, e.g. "widths = 32,64,128,256".
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<int64_t> get_int_list(const std::string& key) const;
  std::vector<double> get_num_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return map_; }

 private:
  std::map<std::string, std::string> map_;
};

}  // namespace heatcast
