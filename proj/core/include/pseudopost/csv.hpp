#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pseudopost {

// Shortest decimal string that round-trips the exact double value.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // cells as raw strings

  // Column index by header name; throws IoError naming the column if absent.
  std::size_t column(const std::string& name) const;
};

// Reads a whole CSV file (comma-separated, no quoting — all emitted files
// are purely numeric plus simple identifiers).  Throws IoError with a line
// number on structural problems.
CsvTable read_csv(const std::string& path);

// Cell parsers carrying (file, 1-based data row, column name) context into
// error messages.
double parse_double_cell(const CsvTable& table, std::size_t row, std::size_t col,
                         const std::string& path);
std::int64_t parse_int_cell(const CsvTable& table, std::size_t row,
                            std::size_t col, const std::string& path);

// Line-oriented CSV writer with LF endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write_row(const std::vector<std::string>& cells);
  void close();  // flushes and reports write errors

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace pseudopost
