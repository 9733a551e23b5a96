#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pnrs/grid.hpp"

namespace pnrs {

// Schema violations carry the 1-based line; 0 means a file-level problem.
struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int ln, const std::string& msg) : std::runtime_error(msg), line(ln) {}
};

// Key-value text config: one `key = value` per line, `#` comments, UTF-8.
// Unknown keys, duplicates, malformed numbers, and missing required keys are
// all schema errors.
struct RunConfig {
  std::string origin;  // file name, for messages
  std::string experiment;
  std::string metric_key = "cylinder";
  double a = 0.0, d = 0.0;
  int kappa = 4;
  GridSpec grid;
  double epsilon = 10.0;  // smallness budget for incoming data
  double blowup_guard = 1e6;
  int schwartz_decay_order = 4;
  std::string out_dir;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 defers to the environment, then hardware

  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig parse_config_file(const std::string& path);

// FNV-1a over the sorted key=value lines plus the effective seed; recorded in
// every manifest so outputs can be traced to their exact inputs.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace pnrs
