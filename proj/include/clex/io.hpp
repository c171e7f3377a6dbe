#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clex/core.hpp"

namespace clex::io {

/// Reads a numeric CSV. A first row that does not parse as numbers is taken
/// as the header and becomes the feature names.
DataMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const DataMatrix& data);

std::vector<int> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels,
                      const std::string& column = "label");

/// Accepts `feature_name,group_label` CSV (matched against `data`'s feature
/// names, or taken in row order when the data is unnamed) or a JSON array of
/// integer group ids. Group ids from CSV follow first appearance in column order.
FeatureGrouping read_grouping(const std::filesystem::path& path, const DataMatrix& data);
void write_grouping_csv(const std::filesystem::path& path, const FeatureGrouping& grouping,
                        const DataMatrix& data);

/// Directory of per-subject CSVs (sorted by file name) plus a domain map JSON
/// file: either an array of C labels or an object {"<component index>": label}.
/// Domain ids follow first appearance in component order.
TimeSeriesPanel read_panel(const std::filesystem::path& dir, const std::filesystem::path& domains_json);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double x);

}  // namespace clex::io
