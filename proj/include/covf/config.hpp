#pragma once

#include <map>
#include <string>
#include <vector>

namespace covf {

// Flat key=value configuration with [section] headers; a key inside
// [section] is addressed as "section.key". Later assignments win, which is
// how command-line --key value overrides are layered on top of the file.
class Config {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  unsigned long long get_uint(const std::string& key, unsigned long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

Config parse_config(const std::string& text, const std::string& origin = "<string>");
Config read_config(const std::string& path);

// "--section.key value" pairs collected from the command line.
void apply_overrides(Config& config,
                     const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace covf
