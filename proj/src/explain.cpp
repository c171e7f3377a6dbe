#include "clex/explain.hpp"

#include <algorithm>
#include <numeric>

#include "clex/parallel.hpp"

namespace clex {
namespace {

void require_explainable(const FittedClusterer& model, const DataMatrix& x, const FeatureGrouping& grouping,
                         int repeats) {
  if (model.all_noise()) {
    throw Error(ErrorCode::AllNoiseModel, "model assigns every training sample to noise; nothing to explain");
  }
  if (x.cols() != model.num_features()) {
    throw Error(ErrorCode::DimensionMismatch, "data has " + std::to_string(x.cols()) + " features, model expects " +
                                                  std::to_string(model.num_features()));
  }
  if (grouping.num_features() != x.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "grouping covers " + std::to_string(grouping.num_features()) +
                                                  " features, data has " + std::to_string(x.cols()));
  }
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeat count K must be >= 1");
}

// Rows of the group's columns are taken from row perm[n] of the source.
void permute_group(Matrix& target, const Matrix& source, const std::vector<std::size_t>& columns,
                   const std::vector<Eigen::Index>& perm) {
  for (auto c : columns) {
    const auto col = static_cast<Eigen::Index>(c);
    for (Eigen::Index n = 0; n < target.rows(); ++n) target(n, col) = source(perm[static_cast<std::size_t>(n)], col);
  }
}

std::vector<Eigen::Index> random_permutation(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "accuracy needs equal-length non-empty label vectors");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double L2PCResult::sample_mean(std::size_t sample_pos, std::size_t group) const {
  double s = 0.0;
  for (int k = 0; k < repeats; ++k) s += at(sample_pos, group, static_cast<std::size_t>(k));
  return s / repeats;
}

PFIResult permutation_feature_importance(const Predictor& predictor, const DataMatrix& x, std::span<const int> y_true,
                                         const FeatureGrouping& grouping, const Metric& metric, RandomSeed seed,
                                         const ExplainOptions& options) {
  if (y_true.size() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "label count does not match samples");
  if (grouping.num_features() != x.cols()) throw Error(ErrorCode::DimensionMismatch, "grouping width mismatch");
  if (options.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeat count K must be >= 1");
  const Matrix& base = x.values();
  const auto baseline_labels = predictor(base);
  const double baseline = metric(y_true, baseline_labels);
  if (!(baseline > 0.0)) {
    throw Error(ErrorCode::ZeroBaselinePerformance, "baseline performance must be positive");
  }

  const auto groups = grouping.num_groups();
  const auto repeats = static_cast<std::size_t>(options.repeats);
  PFIResult result{Matrix(static_cast<Eigen::Index>(groups), options.repeats), baseline};
  parallel_for(groups * repeats, options.workers, [&](std::size_t task) {
    const auto j = task / repeats;
    const auto k = task % repeats;
    Rng rng = make_rng(derive(seed, {stream_tag("pfi"), j, k}));
    Matrix permuted = base;
    permute_group(permuted, base, grouping.members(j), random_permutation(base.rows(), rng));
    const double perf = metric(y_true, predictor(permuted));
    result.importance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = (perf - baseline) / baseline;
  });
  return result;
}

G2PCResult g2pc(const FittedClusterer& model, const DataMatrix& x, const FeatureGrouping& grouping, RandomSeed seed,
                const ExplainOptions& options) {
  require_explainable(model, x, grouping, options.repeats);
  const Matrix& base = x.values();
  const auto original = assign(model, base);
  const auto groups = grouping.num_groups();
  const auto repeats = static_cast<std::size_t>(options.repeats);
  const double n = static_cast<double>(x.rows());

  G2PCResult result{Matrix(static_cast<Eigen::Index>(groups), options.repeats), grouping, seed, options.repeats};
  parallel_for(groups * repeats, options.workers, [&](std::size_t task) {
    const auto j = task / repeats;
    const auto k = task % repeats;
    Rng rng = make_rng(derive(seed, {stream_tag("g2pc"), j, k}));
    Matrix permuted = base;
    permute_group(permuted, base, grouping.members(j), random_permutation(base.rows(), rng));
    const auto relabeled = assign(model, permuted);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < original.size(); ++i) changed += original[i] != relabeled[i] ? 1 : 0;
    result.pct_change(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = static_cast<double>(changed) / n;
  });
  return result;
}

L2PCResult l2pc(const FittedClusterer& model, const DataMatrix& x, const FeatureGrouping& grouping, RandomSeed seed,
                int perturbations, const ExplainOptions& options,
                std::optional<std::vector<std::size_t>> sample_subset) {
  require_explainable(model, x, grouping, options.repeats);
  const auto n = x.rows();
  if (perturbations < 1) throw Error(ErrorCode::InvalidArgument, "perturbation count M must be >= 1");
  if (static_cast<std::size_t>(perturbations) > n - 1) {
    throw Error(ErrorCode::MTooLarge, "M = " + std::to_string(perturbations) + " exceeds N-1 = " + std::to_string(n - 1));
  }
  std::vector<std::size_t> samples;
  if (sample_subset) {
    samples = std::move(*sample_subset);
    for (auto s : samples) {
      if (s >= n) throw Error(ErrorCode::InvalidArgument, "sample index " + std::to_string(s) + " out of range");
    }
  } else {
    samples.resize(n);
    std::iota(samples.begin(), samples.end(), std::size_t{0});
  }

  const Matrix& base = x.values();
  const auto original = assign(model, base);
  const auto groups = grouping.num_groups();
  const auto repeats = static_cast<std::size_t>(options.repeats);
  const auto m = static_cast<std::size_t>(perturbations);

  L2PCResult result;
  result.samples = samples;
  result.num_groups = groups;
  result.repeats = options.repeats;
  result.perturbations = perturbations;
  result.values.assign(samples.size() * groups * repeats, 0.0);
  result.grouping = grouping;
  result.seed = seed;

  parallel_for(samples.size() * groups * repeats, options.workers, [&](std::size_t task) {
    const auto pos = task / (groups * repeats);
    const auto j = (task / repeats) % groups;
    const auto k = task % repeats;
    const auto row = samples[pos];
    Rng rng = make_rng(derive(seed, {stream_tag("l2pc"), row, j, k}));

    // M distinct donors from the other N-1 rows (partial Fisher-Yates).
    std::vector<std::size_t> pool;
    pool.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != row) pool.push_back(i);
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }

    Matrix duplicates = base.row(static_cast<Eigen::Index>(row)).replicate(static_cast<Eigen::Index>(m), 1);
    for (auto c : grouping.members(j)) {
      const auto col = static_cast<Eigen::Index>(c);
      for (std::size_t d = 0; d < m; ++d) {
        duplicates(static_cast<Eigen::Index>(d), col) = base(static_cast<Eigen::Index>(pool[d]), col);
      }
    }
    const auto relabeled = assign(model, duplicates);
    std::size_t changed = 0;
    for (std::size_t d = 0; d < m; ++d) changed += relabeled[d] != original[row] ? 1 : 0;
    result.values[task] = static_cast<double>(changed) / static_cast<double>(m);
  });
  return result;
}

std::vector<double> l2pc_global(const L2PCResult& result) {
  std::vector<double> global(result.num_groups, 0.0);
  if (result.samples.empty()) return global;
  for (std::size_t pos = 0; pos < result.samples.size(); ++pos) {
    for (std::size_t j = 0; j < result.num_groups; ++j) {
      for (int k = 0; k < result.repeats; ++k) global[j] += result.at(pos, j, static_cast<std::size_t>(k));
    }
  }
  const double count = static_cast<double>(result.samples.size()) * result.repeats;
  for (auto& g : global) g /= count;
  return global;
}

GroupStats describe(const std::vector<double>& values) {
  GroupStats s;
  if (values.empty()) return s;
  s.mean = mean(values);
  s.median = median(values);
  s.std = sample_std(values);
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

std::vector<GroupStats> G2PCResult::group_stats() const {
  std::vector<GroupStats> stats;
  for (Eigen::Index j = 0; j < pct_change.rows(); ++j) {
    std::vector<double> row(pct_change.row(j).begin(), pct_change.row(j).end());
    stats.push_back(describe(row));
  }
  return stats;
}

std::vector<SummaryRow> rank_groups(const FeatureGrouping& grouping, const std::vector<std::vector<double>>& values) {
  std::vector<SummaryRow> rows;
  for (std::size_t j = 0; j < values.size(); ++j) rows.push_back({j, grouping.group_label(j), describe(values[j])});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SummaryRow& a, const SummaryRow& b) { return a.stats.mean > b.stats.mean; });
  return rows;
}

std::vector<SummaryRow> summarize(const G2PCResult& result) {
  std::vector<std::vector<double>> values;
  for (Eigen::Index j = 0; j < result.pct_change.rows(); ++j) {
    values.emplace_back(result.pct_change.row(j).begin(), result.pct_change.row(j).end());
  }
  return rank_groups(result.grouping, values);
}

std::vector<SummaryRow> summarize(const L2PCResult& result) {
  std::vector<std::vector<double>> values(result.num_groups);
  for (std::size_t pos = 0; pos < result.samples.size(); ++pos) {
    for (std::size_t j = 0; j < result.num_groups; ++j) {
      for (int k = 0; k < result.repeats; ++k) values[j].push_back(result.at(pos, j, static_cast<std::size_t>(k)));
    }
  }
  return rank_groups(result.grouping, values);
}

}  // namespace clex
