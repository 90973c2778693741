#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace affect {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Strict reader: comma-separated, no quoting, uniform column count,
/// UTF-8, '.' decimal separator. Throws ValidationError with row/column
/// diagnostics on malformed input.
CsvTable read_csv(const std::filesystem::path& path);

/// Parses a full cell as a double; context goes into the error message.
/// row is 1-based as in the file (header = row 1).
double parse_double_cell(const std::string& cell, const std::filesystem::path& file,
                         int row, int col);

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace affect
