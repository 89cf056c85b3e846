#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cohortsbi {

// Strict numeric CSV with a fixed header. Cells must parse as doubles
// ("inf" accepted); any malformed cell fails with its line number.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  const std::string& expected_header);

void write_numeric_csv(const std::string& path, const std::string& header,
                       const std::vector<std::vector<double>>& rows);

// Exact decimal rendering that round-trips IEEE doubles.
std::string format_double(double v);
double parse_double(const std::string& cell, const std::string& context);

// Ordered key=value text file ('#' lines are comments).
using Manifest = std::vector<std::pair<std::string, std::string>>;
void write_manifest(const std::string& path, const Manifest& entries);
Manifest read_manifest(const std::string& path);
std::string manifest_get(const Manifest& m, const std::string& key);
const std::string* manifest_find(const Manifest& m, const std::string& key);

}  // namespace cohortsbi
