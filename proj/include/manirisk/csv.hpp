#pragma once

#include "manirisk/common.hpp"

#include <string>
#include <vector>

namespace manirisk::csv {

// All numeric output uses 17 significant digits so doubles round-trip.
std::string format_double(double v);

std::vector<std::string> split_line(const std::string& line);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // throws IoError if missing
};

Table read_csv(const std::string& path);

// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace manirisk::csv
