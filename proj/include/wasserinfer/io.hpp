#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wasserinfer/errors.hpp"

namespace wasserinfer::io {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Parses a whole (trimmed) field as a double; empty on failure.
inline std::optional<double> parse_double(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

/// Splits one comma-separated line. Double-quoted fields may contain commas;
/// a doubled quote inside them is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

/// Header plus string cells. `line_numbers[r]` is the 1-based file line of
/// data row r.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw MissingColumn(name);
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      table.header = split_csv_line(line);
      for (auto& h : table.header) h = std::string(trim(h));
      // tolerate a UTF-8 byte order mark
      if (!table.header.empty() && table.header[0].starts_with("\xEF\xBB\xBF")) {
        table.header[0].erase(0, 3);
      }
      have_header = true;
      continue;
    }
    table.rows.push_back(split_csv_line(line));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ParseError("CSV input has no header row", 0);
  return table;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

/// One real per line; blank lines and lines starting with '#' are skipped.
inline std::vector<double> read_values(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = trim(line);
    if (field.empty() || field.front() == '#') continue;
    const auto v = parse_double(field);
    if (!v) throw ParseError("not a number: '" + std::string(field) + "'", line_no);
    values.push_back(*v);
  }
  return values;
}

/// The named numeric column of a CSV with a header row.
inline std::vector<double> read_csv_column(std::istream& in, const std::string& column) {
  const CsvTable table = read_csv(in);
  const std::size_t col = table.column(column);
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (col >= row.size()) throw ParseError("row has too few fields", table.line_numbers[r]);
    const auto v = parse_double(row[col]);
    if (!v) {
      throw ParseError("not a number in column '" + column + "': '" + row[col] + "'",
                       table.line_numbers[r]);
    }
    values.push_back(*v);
  }
  return values;
}

/// Sample values from `path`: a named CSV column when `column` is non-empty,
/// otherwise one value per line.
inline std::vector<double> read_sample_file(const std::string& path,
                                            const std::string& column = {}) {
  auto in = open_input(path);
  return column.empty() ? read_values(in) : read_csv_column(in, column);
}

}  // namespace wasserinfer::io
