#pragma once

#include <map>
#include <string>
#include <vector>

namespace covf {

// 16-hex content hash of a file (FNV-1a over the raw bytes).
std::string file_digest(const std::string& path);
std::string bytes_digest(const std::string& bytes);

// Provenance record written next to every command's outputs. Input digests
// are taken before the work starts, output digests after it finishes, and the
// manifest itself is written atomically last.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::map<std::string, std::string> config;   // flattened config snapshot
  std::map<std::string, std::string> inputs;   // path -> digest
  std::map<std::string, std::string> outputs;  // path -> digest
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;

  void add_input(const std::string& path) { inputs[path] = file_digest(path); }
  void add_output(const std::string& path) { outputs[path] = file_digest(path); }
};

std::string current_timestamp();

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

}  // namespace covf
