#include "pseudopost/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pseudopost/errors.hpp"

namespace pseudopost {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("CSV is missing the required column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = s.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(s.substr(start));
        return cells;
      }
      cells.push_back(s.substr(start, comma - start));
      start = comma + 1;
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line);
    // Trim surrounding spaces in each cell.
    for (std::string& c : cells) {
      const std::size_t b = c.find_first_not_of(" \t");
      const std::size_t e = c.find_last_not_of(" \t");
      c = (b == std::string::npos) ? std::string() : c.substr(b, e - b + 1);
    }
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw IoError("'" + path + "' line " + std::to_string(line_no) + ": " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) {
    throw IoError("'" + path + "' is empty (no header row)");
  }
  return table;
}

double parse_double_cell(const CsvTable& table, std::size_t row, std::size_t col,
                         const std::string& path) {
  const std::string& cell = table.rows[row][col];
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw IoError("'" + path + "' row " + std::to_string(row + 1) +
                  ", column '" + table.header[col] + "': cannot parse '" +
                  cell + "' as a number");
  }
  return value;
}

std::int64_t parse_int_cell(const CsvTable& table, std::size_t row,
                            std::size_t col, const std::string& path) {
  const std::string& cell = table.rows[row][col];
  std::int64_t value = 0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw IoError("'" + path + "' row " + std::to_string(row + 1) +
                  ", column '" + table.header[col] + "': cannot parse '" +
                  cell + "' as an integer");
  }
  return value;
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::string path;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
  impl_->path = path;
  impl_->out.open(path, std::ios::binary);  // binary keeps LF endings
  if (!impl_->out) {
    const std::string msg = "cannot open '" + path + "' for writing";
    delete impl_;
    impl_ = nullptr;
    throw IoError(msg);
  }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) line += ',';
    line += cells[i];
  }
  line += '\n';
  impl_->out.write(line.data(), static_cast<std::streamsize>(line.size()));
}

void CsvWriter::close() {
  impl_->out.flush();
  if (!impl_->out) {
    throw IoError("write failure on '" + impl_->path + "'");
  }
  impl_->out.close();
}

}  // namespace pseudopost
