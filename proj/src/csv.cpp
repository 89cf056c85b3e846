#include "cohortsbi/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "cohortsbi/errors.hpp"

namespace cohortsbi {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double parse_double(const std::string& cell, const std::string& context) {
  std::string c = strip(cell);
  if (c == "inf" || c == "+inf") return std::numeric_limits<double>::infinity();
  if (c == "-inf") return -std::numeric_limits<double>::infinity();
  const char* begin = c.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw FormatError(context + ": cannot parse number '" + cell + "'");
  return v;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  if (strip(line) != expected_header)
    throw FormatError(path + ": expected header '" + expected_header + "', got '" +
                      strip(line) + "'");
  const std::size_t n_cols = split(expected_header, ',').size();

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != n_cols)
      throw FormatError(path + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols) + " columns, got " +
                        std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(n_cols);
    for (const auto& cell : cells)
      row.push_back(parse_double(cell, path + ": line " + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_numeric_csv(const std::string& path, const std::string& header,
                       const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_manifest(const std::string& path, const Manifest& entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  if (!out) throw IoError("write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Manifest entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    auto pos = s.find('=');
    if (pos == std::string::npos)
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": expected key=value");
    entries.emplace_back(strip(s.substr(0, pos)), strip(s.substr(pos + 1)));
  }
  return entries;
}

const std::string* manifest_find(const Manifest& m, const std::string& key) {
  for (const auto& [k, v] : m)
    if (k == key) return &v;
  return nullptr;
}

std::string manifest_get(const Manifest& m, const std::string& key) {
  if (const std::string* v = manifest_find(m, key)) return *v;
  throw FormatError("manifest: missing key '" + key + "'");
}

}  // namespace cohortsbi
