#include "covf/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace covf {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + key + " is not a number: '" + it->second + "'");
  }
}

long long Config::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + key + " is not an integer: '" + it->second + "'");
  }
}

unsigned long long Config::get_uint(const std::string& key, unsigned long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config: " + key + " is not an unsigned integer: '" + it->second +
                             "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: " + key + " is not a boolean: '" + v + "'");
}

Config parse_config(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.set(section.empty() ? key : section + "." + key, trim(t.substr(eq + 1)));
  }
  return cfg;
}

Config read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_overrides(Config& config,
                     const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [key, value] : overrides) config.set(key, value);
}

}  // namespace covf
