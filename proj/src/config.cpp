#include "heatcast/config.hpp"

#include <fstream>
#include <sstream>

#include "heatcast/common.hpp"

namespace heatcast {

static std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(strprintf("config line %d: expected 'key = value'", lineno));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(strprintf("config line %d: empty key", lineno));
    }
    cfg.map_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return map_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  map_[key] = value;
}

std::string Config::get_str(const std::string& key,
                            const std::string& fallback) const {
  auto it = map_.find(key);
  return it == map_.end() ? fallback : it->second;
}

std::string Config::require_str(const std::string& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) throw UsageError("config key '" + key + "' is required");
  return it->second;
}

double Config::get_num(const std::string& key, double fallback) const {
  auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' is not a number: '" +
                     it->second + "'");
  }
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
  auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  try {
    size_t pos = 0;
    int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' is not an integer: '" +
                     it->second + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = map_.find(key);
  if (it == map_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw UsageError("config key '" + key + "' is not a boolean: '" + it->second +
                   "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = map_.find(key);
  if (it == map_.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<int64_t> Config::get_int_list(const std::string& key) const {
  std::vector<int64_t> out;
  for (const auto& s : get_list(key)) {
    try {
      out.push_back(std::stoll(s));
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': bad integer '" + s + "'");
    }
  }
  return out;
}

std::vector<double> Config::get_num_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_list(key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': bad number '" + s + "'");
    }
  }
  return out;
}

}  // namespace heatcast
