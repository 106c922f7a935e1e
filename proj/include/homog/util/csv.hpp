#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace homog {

/// Minimal CSV table. Numbers are rendered with a fixed format so that equal
/// inputs give byte-identical files.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string str() const;
  void write(const std::filesystem::path& path) const;
};

/// %.12g, with "nan" / "inf" / "-inf" spelled out.
std::string format_number(double v);

}  // namespace homog
