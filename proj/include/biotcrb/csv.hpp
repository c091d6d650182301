#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace biotcrb {

// Shortest round-trip decimal form (std::to_chars): parsing the string back
// recovers the exact double.
std::string format_double(double value);

// RFC 4180 writer: CRLF line ends, fields quoted only when they contain a
// comma, quote, or line break.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::string str() const;
  size_t row_count() const { return rows_.size(); }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int64_t v) { return std::to_string(v); }
  static std::string cell(uint64_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Minimal RFC 4180 reader for round-trip tests and the acceptance suite.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace biotcrb
