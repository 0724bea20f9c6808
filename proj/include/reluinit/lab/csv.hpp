#pragma once

// CSV tables: one "# schema=reluinit/<name>/<version>" line, then a header
// row, then data rows. Comma separated, LF line endings; doubles carry 17
// significant digits.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "reluinit/errors.hpp"

namespace reluinit::lab {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Shortest text that parses back to the same double.
inline std::string format_shortest(double v) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Cell {
  std::string text;
  Cell(double v) : text(format_double(v)) {}
  Cell(int v) : text(std::to_string(v)) {}
  Cell(long v) : text(std::to_string(v)) {}
  Cell(long long v) : text(std::to_string(v)) {}
  Cell(unsigned v) : text(std::to_string(v)) {}
  Cell(unsigned long v) : text(std::to_string(v)) {}
  Cell(unsigned long long v) : text(std::to_string(v)) {}
  Cell(const char* s) : text(s) {}
  Cell(std::string s) : text(std::move(s)) {}
};

class CsvTable {
 public:
  CsvTable(std::string schema, std::vector<std::string> columns, int version = 1)
      : schema_(std::move(schema)), columns_(std::move(columns)), version_(version) {}

  void add(std::initializer_list<Cell> cells) { add(std::vector<Cell>(cells)); }
  void add(const std::vector<Cell>& cells) {
    if (cells.size() != columns_.size()) throw ShapeError("CsvTable: row width does not match header");
    std::vector<std::string> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(c.text);
    rows_.push_back(std::move(row));
  }

  const std::string& schema() const noexcept { return schema_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_.at(i); }

  std::string str() const {
    std::string out = "# schema=reluinit/" + schema_ + "/" + std::to_string(version_) + "\n";
    append_line(out, columns_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }

  std::string schema_;
  std::vector<std::string> columns_;
  int version_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace reluinit::lab
