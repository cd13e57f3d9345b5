#include "covf/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "covf/rng.hpp"

namespace covf {

std::string bytes_digest(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("digest: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return bytes_digest(ss.str());
}

std::string current_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::json j;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("manifest: cannot write " + tmp);
    out << j.dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("manifest: cannot move " + tmp + " into place");
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  RunManifest m;
  m.tool_version = j.value("tool_version", "");
  m.command = j.value("command", "");
  if (j.contains("config")) m.config = j["config"].get<std::map<std::string, std::string>>();
  if (j.contains("inputs")) m.inputs = j["inputs"].get<std::map<std::string, std::string>>();
  if (j.contains("outputs")) m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  return m;
}

}  // namespace covf
