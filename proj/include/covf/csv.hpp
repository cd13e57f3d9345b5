#pragma once

#include <string>
#include <vector>

namespace covf {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  bool has_column(const std::string& name) const;
};

// Minimal reader for the comma-separated formats this tool defines: UTF-8,
// LF line endings, optional double-quoted cells. Throws std::runtime_error on
// unreadable files or ragged rows.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");

void write_csv(const std::string& path, const CsvTable& table);

// Canonical numeric formatting for CSV output (shortest round-trippable).
std::string format_double(double v);

}  // namespace covf
