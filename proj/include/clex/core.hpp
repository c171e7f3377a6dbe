#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clex/error.hpp"

namespace clex {

/// Samples are rows, features are columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// N x F matrix of finite values with optional feature names.
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(Matrix values, std::vector<std::string> feature_names = {});

  const Matrix& values() const noexcept { return values_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  bool has_names() const noexcept { return !names_.empty(); }

  /// Name of column f, or "f<index>" when unnamed.
  std::string feature_name(std::size_t f) const;

 private:
  Matrix values_;
  std::vector<std::string> names_;
};

/// Partition of F features into J non-empty groups.
class FeatureGrouping {
 public:
  FeatureGrouping() = default;
  explicit FeatureGrouping(std::vector<int> group_of, std::vector<std::string> group_labels = {});

  std::size_t num_features() const noexcept { return group_of_.size(); }
  std::size_t num_groups() const noexcept { return members_.size(); }
  const std::vector<int>& group_of() const noexcept { return group_of_; }
  const std::vector<std::string>& group_labels() const noexcept { return labels_; }
  /// Column indices of group j, ascending.
  const std::vector<std::size_t>& members(std::size_t j) const { return members_.at(j); }
  std::string group_label(std::size_t j) const;
  bool is_identity() const noexcept;

 private:
  std::vector<int> group_of_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> members_;
};

FeatureGrouping identity_grouping(std::size_t num_features);

/// Cluster id per sample; kNoise marks density-based noise points.
class ClusterAssignment {
 public:
  static constexpr int kNoise = -1;

  ClusterAssignment() = default;
  ClusterAssignment(std::vector<int> labels, int num_clusters);

  const std::vector<int>& labels() const noexcept { return labels_; }
  int num_clusters() const noexcept { return num_clusters_; }
  std::size_t size() const noexcept { return labels_.size(); }
  int operator[](std::size_t i) const { return labels_[i]; }
  bool has_noise() const noexcept;
  bool all_noise() const noexcept;

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;

 private:
  std::vector<int> labels_;
  int num_clusters_ = 0;
};

/// Per-subject component time series with a domain id per component.
struct TimeSeriesPanel {
  std::vector<Matrix> subjects;          // each T_i x C
  std::vector<int> component_domains;    // length C, ids in [0, D)
  std::vector<std::string> domain_labels;  // length D, may be empty

  std::size_t num_components() const noexcept { return component_domains.size(); }
  std::size_t num_domains() const;
  void validate() const;
};

struct ConnectivityFeatures {
  DataMatrix data;
  FeatureGrouping grouping;
};

/// Column-wise standardization with the sample (n-1) standard deviation.
DataMatrix zscore(const DataMatrix& data);

/// Strict-upper-triangle Pearson correlations per subject, grouped by domain pair.
ConnectivityFeatures connectivity_features(const TimeSeriesPanel& panel);

/// Index of domain pair (a, b), a <= b, in the order (0,0),(0,1),...,(D-1,D-1).
std::size_t domain_pair_index(std::size_t a, std::size_t b, std::size_t num_domains);

double mean(std::span<const double> xs);
double median(std::vector<double> xs);
double sample_std(std::span<const double> xs);

}  // namespace clex
