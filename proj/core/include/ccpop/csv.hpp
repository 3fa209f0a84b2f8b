#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ccpop {

/// Minimal CSV table: a header row plus data rows of equal width.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws CsvError if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. Supports double-quoted
/// fields; trims surrounding whitespace from unquoted fields. Errors carry
/// the path and 1-based line number.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& path);

/// Field accessors with row/column context in error messages. `row` is the
/// 0-based data-row index (line row+2 in the file).
double csv_double(const CsvTable& t, std::size_t row, std::size_t col);
long csv_long(const CsvTable& t, std::size_t row, std::size_t col);

}  // namespace ccpop
