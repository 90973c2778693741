#include "affect/csv.hpp"

#include <charconv>
#include <fstream>

#include "affect/types.hpp"

namespace affect {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  CsvTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
    auto cells = split_line(line);
    if (lineno == 1) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size())
        throw ValidationError(path.string() + ": row " + std::to_string(lineno) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw ValidationError(path.string() + ": empty file");
  return table;
}

double parse_double_cell(const std::string& cell, const std::filesystem::path& file,
                         int row, int col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ValidationError(file.string() + ": non-numeric cell '" + cell + "' at row " +
                          std::to_string(row) + ", column " + std::to_string(col));
  return value;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline translation
  if (!out) throw ValidationError("cannot write file: " + path.string());
  auto write_row = [&out, &path](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find(',') != std::string::npos)
        throw ValidationError(path.string() + ": cell value contains a comma: " + cells[i]);
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& r : rows) {
    if (r.size() != header.size())
      throw ValidationError(path.string() + ": row width does not match header");
    write_row(r);
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace affect
