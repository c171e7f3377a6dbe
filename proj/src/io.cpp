#include "clex/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace clex::io {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r\"");
    auto e = cell.find_last_not_of(" \t\r\"");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && parse_number(cells[i], row[i]);
    if (!numeric) {
      if (table.header.empty() && table.rows.empty()) {
        table.header = std::move(cells);
        continue;
      }
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    const auto width = table.header.empty() ? (table.rows.empty() ? row.size() : table.rows.front().size())
                                            : table.header.size();
    if (row.size() != width) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(width) + " columns, got " + std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Matrix to_matrix(const RawTable& table) {
  if (table.rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.rows.front().size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r][c];
    }
  }
  return m;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnreadableFile, "cannot write " + path.string());
  out << text;
}

DataMatrix read_matrix_csv(const std::filesystem::path& path) {
  auto table = read_table(path);
  return DataMatrix(to_matrix(table), table.header);
}

void write_matrix_csv(const std::filesystem::path& path, const DataMatrix& data) {
  std::string text;
  for (std::size_t f = 0; f < data.cols(); ++f) {
    if (f) text += ',';
    text += data.feature_name(f);
  }
  text += '\n';
  const auto& v = data.values();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      if (c) text += ',';
      text += format_double(v(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  auto table = read_table(path);
  std::vector<int> labels;
  for (const auto& row : table.rows) {
    if (row.size() != 1) throw Error(ErrorCode::ParseError, path.string() + ": labels file must have one column");
    labels.push_back(static_cast<int>(row[0]));
  }
  return labels;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<int>& labels, const std::string& column) {
  std::string text = column + "\n";
  for (int l : labels) text += std::to_string(l) + "\n";
  write_text(path, text);
}

FeatureGrouping read_grouping(const std::filesystem::path& path, const DataMatrix& data) {
  const auto text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first != std::string::npos && text[first] == '[') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    std::vector<int> ids;
    for (const auto& v : j) {
      if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, path.string() + ": group ids must be integers");
      ids.push_back(v.get<int>());
    }
    if (ids.size() != data.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "grouping has " + std::to_string(ids.size()) + " entries, data has " +
                                                    std::to_string(data.cols()) + " features");
    }
    return FeatureGrouping(std::move(ids));
  }

  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<std::string, std::string>> entries;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (cells.size() != 2) throw Error(ErrorCode::ParseError, path.string() + ": expected feature_name,group_label");
    if (first_line && cells[0] == "feature_name" && cells[1] == "group_label") {
      first_line = false;
      continue;
    }
    first_line = false;
    entries.emplace_back(cells[0], cells[1]);
  }
  // any other header line shows up as one extra entry
  if (entries.size() == data.cols() + 1) entries.erase(entries.begin());
  if (entries.size() != data.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "grouping has " + std::to_string(entries.size()) +
                                                  " entries, data has " + std::to_string(data.cols()) + " features");
  }
  std::map<std::string, std::string> by_name;
  for (const auto& [name, label] : entries) {
    if (!by_name.emplace(name, label).second) {
      throw Error(ErrorCode::ParseError, path.string() + ": duplicate feature " + name);
    }
  }
  std::vector<std::string> labels;
  std::vector<int> ids(data.cols());
  for (std::size_t f = 0; f < data.cols(); ++f) {
    std::string label;
    if (data.has_names()) {
      auto it = by_name.find(data.feature_name(f));
      if (it == by_name.end()) throw Error(ErrorCode::ParseError, "grouping does not name feature " + data.feature_name(f));
      label = it->second;
    } else {
      label = entries[f].second;
    }
    auto pos = std::find(labels.begin(), labels.end(), label);
    if (pos == labels.end()) {
      labels.push_back(label);
      pos = labels.end() - 1;
    }
    ids[f] = static_cast<int>(pos - labels.begin());
  }
  return FeatureGrouping(std::move(ids), std::move(labels));
}

void write_grouping_csv(const std::filesystem::path& path, const FeatureGrouping& grouping, const DataMatrix& data) {
  std::string text = "feature_name,group_label\n";
  for (std::size_t f = 0; f < grouping.num_features(); ++f) {
    text += data.feature_name(f) + "," + grouping.group_label(static_cast<std::size_t>(grouping.group_of()[f])) + "\n";
  }
  write_text(path, text);
}

TimeSeriesPanel read_panel(const std::filesystem::path& dir, const std::filesystem::path& domains_json) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::UnreadableFile, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(domains_json));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, domains_json.string() + ": " + e.what());
  }
  std::vector<std::string> component_labels;
  if (j.is_array()) {
    for (const auto& v : j) component_labels.push_back(v.get<std::string>());
  } else if (j.is_object()) {
    component_labels.resize(j.size());
    for (const auto& [key, value] : j.items()) {
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size() || idx >= j.size()) {
        throw Error(ErrorCode::ParseError, domains_json.string() + ": bad component index '" + key + "'");
      }
      component_labels[idx] = value.get<std::string>();
    }
  } else {
    throw Error(ErrorCode::ParseError, domains_json.string() + ": expected array or object");
  }

  TimeSeriesPanel panel;
  for (const auto& label : component_labels) {
    auto pos = std::find(panel.domain_labels.begin(), panel.domain_labels.end(), label);
    if (pos == panel.domain_labels.end()) {
      panel.domain_labels.push_back(label);
      pos = panel.domain_labels.end() - 1;
    }
    panel.component_domains.push_back(static_cast<int>(pos - panel.domain_labels.begin()));
  }
  for (const auto& f : files) panel.subjects.push_back(to_matrix(read_table(f)));
  panel.validate();
  return panel;
}

}  // namespace clex::io
