#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace heatcast {

// Error taxonomy mirrors the CLI exit codes: usage -> 1, data -> 2,
// numerical -> 3. Anything else escaping main is a plain failure.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::string strprintf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[1024];
  vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return std::string(buf);
}

// Diagnostics go to stderr so report/artifact files stay byte-stable.
inline void log_info(const std::string& msg) {
  fprintf(stderr, "[heatcast] %s\n", msg.c_str());
}

inline void log_warn(const std::string& msg) {
  fprintf(stderr, "[heatcast] warning: %s\n", msg.c_str());
}

}  // namespace heatcast
