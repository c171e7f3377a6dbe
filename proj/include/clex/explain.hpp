#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clex/clustering.hpp"
#include "clex/core.hpp"
#include "clex/random.hpp"

namespace clex {

inline constexpr int kDefaultRepeats = 100;
inline constexpr int kDefaultPerturbations = 30;

struct GroupStats {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Global permutation percent change: fraction of samples that switch
/// cluster when one feature group is permuted across samples.
struct G2PCResult {
  Matrix pct_change;  // J x K
  FeatureGrouping grouping;
  RandomSeed seed;
  int repeats = 0;

  std::vector<GroupStats> group_stats() const;
};

/// Local perturbation percent change for each (sample, group, repeat).
struct L2PCResult {
  std::vector<std::size_t> samples;  // row indices of X that were explained
  std::size_t num_groups = 0;
  int repeats = 0;
  int perturbations = 0;
  std::vector<double> values;  // samples x groups x repeats, repeat fastest
  FeatureGrouping grouping;
  RandomSeed seed;

  double at(std::size_t sample_pos, std::size_t group, std::size_t repeat) const {
    return values[(sample_pos * num_groups + group) * static_cast<std::size_t>(repeats) + repeat];
  }
  /// Mean over repeats for one explained sample and group.
  double sample_mean(std::size_t sample_pos, std::size_t group) const;
};

struct PFIResult {
  Matrix importance;  // J x K
  double baseline = 0.0;
};

struct ExplainOptions {
  int repeats = kDefaultRepeats;
  unsigned workers = 1;
};

using Predictor = std::function<std::vector<int>(const Matrix&)>;
using Metric = std::function<double(std::span<const int> truth, std::span<const int> predicted)>;

double accuracy(std::span<const int> truth, std::span<const int> predicted);

/// Supervised permutation feature importance: relative change of `metric`
/// after permuting each group, (perf_permuted - perf_base) / perf_base.
PFIResult permutation_feature_importance(const Predictor& predictor, const DataMatrix& x, std::span<const int> y_true,
                                         const FeatureGrouping& grouping, const Metric& metric, RandomSeed seed,
                                         const ExplainOptions& options = {});

G2PCResult g2pc(const FittedClusterer& model, const DataMatrix& x, const FeatureGrouping& grouping, RandomSeed seed,
                const ExplainOptions& options = {});

/// `perturbations` is M, the number of perturbed duplicates per repeat;
/// `sample_subset` restricts which rows are explained (all rows when empty).
L2PCResult l2pc(const FittedClusterer& model, const DataMatrix& x, const FeatureGrouping& grouping, RandomSeed seed,
                int perturbations = kDefaultPerturbations, const ExplainOptions& options = {},
                std::optional<std::vector<std::size_t>> sample_subset = std::nullopt);

/// Per-group mean over all explained samples and repeats.
std::vector<double> l2pc_global(const L2PCResult& result);

struct SummaryRow {
  std::size_t group = 0;
  std::string label;
  GroupStats stats;
};

/// Groups ordered by descending mean; ties keep the lower group id first.
std::vector<SummaryRow> summarize(const G2PCResult& result);
std::vector<SummaryRow> summarize(const L2PCResult& result);

std::vector<SummaryRow> rank_groups(const FeatureGrouping& grouping, const std::vector<std::vector<double>>& values);

GroupStats describe(const std::vector<double>& values);

}  // namespace clex
