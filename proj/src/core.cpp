#include "clex/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace clex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConstantFeature: return "ConstantFeature";
    case ErrorCode::ConstantComponent: return "ConstantComponent";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientClusters: return "InsufficientClusters";
    case ErrorCode::DegenerateCluster: return "DegenerateCluster";
    case ErrorCode::AllNoiseModel: return "AllNoiseModel";
    case ErrorCode::MTooLarge: return "MTooLarge";
    case ErrorCode::ZeroBaselinePerformance: return "ZeroBaselinePerformance";
    case ErrorCode::DegenerateFold: return "DegenerateFold";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

DataMatrix::DataMatrix(Matrix values, std::vector<std::string> feature_names)
    : values_(std::move(values)), names_(std::move(feature_names)) {
  if (values_.rows() < 2 || values_.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "data matrix needs at least 2 samples and 1 feature, got " +
                    std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()));
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "data matrix contains NaN or Inf");
  }
  if (!names_.empty()) {
    if (names_.size() != cols()) {
      throw Error(ErrorCode::InvalidArgument, "feature name count does not match column count");
    }
    std::set<std::string> unique(names_.begin(), names_.end());
    if (unique.size() != names_.size()) {
      throw Error(ErrorCode::InvalidArgument, "feature names must be unique");
    }
  }
}

std::string DataMatrix::feature_name(std::size_t f) const {
  if (!names_.empty()) return names_.at(f);
  return "f" + std::to_string(f);
}

FeatureGrouping::FeatureGrouping(std::vector<int> group_of, std::vector<std::string> group_labels)
    : group_of_(std::move(group_of)), labels_(std::move(group_labels)) {
  if (group_of_.empty()) throw Error(ErrorCode::InvalidArgument, "grouping must cover at least one feature");
  const int max_id = *std::max_element(group_of_.begin(), group_of_.end());
  if (*std::min_element(group_of_.begin(), group_of_.end()) < 0) {
    throw Error(ErrorCode::InvalidArgument, "group ids must be non-negative");
  }
  members_.assign(static_cast<std::size_t>(max_id) + 1, {});
  for (std::size_t f = 0; f < group_of_.size(); ++f) {
    members_[static_cast<std::size_t>(group_of_[f])].push_back(f);
  }
  for (std::size_t j = 0; j < members_.size(); ++j) {
    if (members_[j].empty()) {
      throw Error(ErrorCode::InvalidArgument, "group " + std::to_string(j) + " has no features");
    }
  }
  if (!labels_.empty() && labels_.size() != members_.size()) {
    throw Error(ErrorCode::InvalidArgument, "group label count does not match group count");
  }
}

std::string FeatureGrouping::group_label(std::size_t j) const {
  if (!labels_.empty()) return labels_.at(j);
  return "g" + std::to_string(j);
}

bool FeatureGrouping::is_identity() const noexcept {
  for (std::size_t f = 0; f < group_of_.size(); ++f) {
    if (group_of_[f] != static_cast<int>(f)) return false;
  }
  return true;
}

FeatureGrouping identity_grouping(std::size_t num_features) {
  if (num_features < 1) throw Error(ErrorCode::InvalidArgument, "identity grouping needs F >= 1");
  std::vector<int> ids(num_features);
  std::iota(ids.begin(), ids.end(), 0);
  return FeatureGrouping(std::move(ids));
}

ClusterAssignment::ClusterAssignment(std::vector<int> labels, int num_clusters)
    : labels_(std::move(labels)), num_clusters_(num_clusters) {
  if (num_clusters_ < 0) throw Error(ErrorCode::InvalidArgument, "negative cluster count");
  for (int l : labels_) {
    if (l != kNoise && (l < 0 || l >= num_clusters_)) {
      throw Error(ErrorCode::InvalidArgument, "cluster id " + std::to_string(l) + " out of range");
    }
  }
}

bool ClusterAssignment::has_noise() const noexcept {
  return std::find(labels_.begin(), labels_.end(), kNoise) != labels_.end();
}

bool ClusterAssignment::all_noise() const noexcept {
  return std::all_of(labels_.begin(), labels_.end(), [](int l) { return l == kNoise; });
}

std::size_t TimeSeriesPanel::num_domains() const {
  if (component_domains.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(component_domains.begin(), component_domains.end())) + 1;
}

void TimeSeriesPanel::validate() const {
  if (subjects.size() < 2) throw Error(ErrorCode::InvalidArgument, "panel needs at least 2 subjects");
  const auto c = component_domains.size();
  if (c < 2) throw Error(ErrorCode::InvalidArgument, "panel needs at least 2 components");
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (static_cast<std::size_t>(subjects[s].cols()) != c) {
      throw Error(ErrorCode::DimensionMismatch,
                  "subject " + std::to_string(s) + " has " + std::to_string(subjects[s].cols()) +
                      " components, expected " + std::to_string(c));
    }
    if (subjects[s].rows() < 3) {
      throw Error(ErrorCode::InvalidArgument, "subject " + std::to_string(s) + " has fewer than 3 timepoints");
    }
    if (!subjects[s].allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "subject " + std::to_string(s) + " contains NaN or Inf");
    }
  }
  for (int d : component_domains) {
    if (d < 0) throw Error(ErrorCode::InvalidArgument, "negative domain id");
  }
  const auto d = num_domains();
  std::vector<bool> seen(d, false);
  for (int id : component_domains) seen[static_cast<std::size_t>(id)] = true;
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorCode::InvalidArgument, "every domain id must be used by at least one component");
  }
  if (!domain_labels.empty() && domain_labels.size() != d) {
    throw Error(ErrorCode::InvalidArgument, "domain label count does not match domain count");
  }
}

DataMatrix zscore(const DataMatrix& data) {
  Matrix out = data.values();
  const auto n = static_cast<double>(out.rows());
  for (Eigen::Index f = 0; f < out.cols(); ++f) {
    auto col = out.col(f);
    const double mu = col.mean();
    const double sd = std::sqrt((col.array() - mu).square().sum() / (n - 1.0));
    if (!(sd > 1e-12)) {
      throw Error(ErrorCode::ConstantFeature,
                  "feature " + data.feature_name(static_cast<std::size_t>(f)) + " has zero variance");
    }
    col = (col.array() - mu) / sd;
  }
  return DataMatrix(std::move(out), data.feature_names());
}

std::size_t domain_pair_index(std::size_t a, std::size_t b, std::size_t num_domains) {
  if (a > b) std::swap(a, b);
  // rows 0..a-1 contribute D, D-1, ..., D-a+1 pairs
  return a * num_domains - a * (a - 1) / 2 + (b - a);
}

ConnectivityFeatures connectivity_features(const TimeSeriesPanel& panel) {
  panel.validate();
  const std::size_t c = panel.num_components();
  const std::size_t d = panel.num_domains();
  const std::size_t num_features = c * (c - 1) / 2;

  Matrix features(static_cast<Eigen::Index>(panel.subjects.size()), static_cast<Eigen::Index>(num_features));
  for (std::size_t s = 0; s < panel.subjects.size(); ++s) {
    Matrix centered = panel.subjects[s].rowwise() - panel.subjects[s].colwise().mean();
    Vector norms = centered.colwise().norm().transpose();
    for (std::size_t i = 0; i < c; ++i) {
      if (!(norms[static_cast<Eigen::Index>(i)] > 1e-12 * std::sqrt(static_cast<double>(centered.rows())))) {
        throw Error(ErrorCode::ConstantComponent,
                    "subject " + std::to_string(s) + " component " + std::to_string(i) + " is constant");
      }
    }
    std::size_t f = 0;
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = i + 1; j < c; ++j, ++f) {
        const auto ci = static_cast<Eigen::Index>(i);
        const auto cj = static_cast<Eigen::Index>(j);
        double r = centered.col(ci).dot(centered.col(cj)) / (norms[ci] * norms[cj]);
        features(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) = std::clamp(r, -1.0, 1.0);
      }
    }
  }

  std::vector<std::string> names;
  std::vector<int> group_of;
  names.reserve(num_features);
  group_of.reserve(num_features);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      names.push_back("c" + std::to_string(i) + "_c" + std::to_string(j));
      const auto di = static_cast<std::size_t>(panel.component_domains[i]);
      const auto dj = static_cast<std::size_t>(panel.component_domains[j]);
      group_of.push_back(static_cast<int>(domain_pair_index(di, dj, d)));
    }
  }

  // Only pairs that actually occur become groups; a domain with a single
  // component has no within-domain pair.
  const std::size_t all_pairs = d * (d + 1) / 2;
  std::vector<int> remap(all_pairs, -1);
  std::vector<std::string> labels;
  int next = 0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      const auto idx = domain_pair_index(a, b, d);
      if (std::find(group_of.begin(), group_of.end(), static_cast<int>(idx)) == group_of.end()) continue;
      remap[idx] = next++;
      auto label_of = [&](std::size_t x) {
        return panel.domain_labels.empty() ? "d" + std::to_string(x) : panel.domain_labels[x];
      };
      labels.push_back(a == b ? label_of(a) : label_of(a) + "/" + label_of(b));
    }
  }
  for (int& g : group_of) g = remap[static_cast<std::size_t>(g)];

  return {DataMatrix(std::move(features), std::move(names)),
          FeatureGrouping(std::move(group_of), std::move(labels))};
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace clex
