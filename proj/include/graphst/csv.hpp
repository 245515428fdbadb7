#pragma once

#include <string>
#include <vector>

namespace graphst {

// Minimal comma-separated reader/writer: UTF-8, '.' decimal point, LF line
// endings, no quoting. Fields here are numeric or simple identifiers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

// Parse helpers that raise ParseError naming file, line (1-based, header =
// line 1) and column on malformed fields.
double parse_double_field(const std::string& field, const std::string& file, int line, int col);
long parse_int_field(const std::string& field, const std::string& file, int line, int col);

// 17 significant digits: round-trips fp64 exactly.
std::string format_double(double v);

}  // namespace graphst
