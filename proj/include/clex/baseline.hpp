#pragma once

#include <span>
#include <vector>

#include "clex/core.hpp"
#include "clex/random.hpp"

namespace clex {

/// Logistic regression with elastic-net penalty
///   mean logloss + lambda * (alpha * |w|_1 + (1 - alpha) / 2 * |w|_2^2),
/// intercept unpenalized.
struct ElasticNetModel {
  Vector weights;
  double intercept = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Set when lambda = 0 and the optimizer hit its cap, the usual symptom of
  /// linearly separable data.
  bool separation_warning = false;
};

struct ElasticNetOptions {
  int max_iter = 5000;
  /// Stop when the proximal gradient mapping's largest component drops below this.
  double tolerance = 1e-8;
};

ElasticNetModel fit_elastic_net_logreg(const Matrix& x, std::span<const int> y, double lambda, double alpha,
                                       const ElasticNetOptions& options = {},
                                       const ElasticNetModel* warm_start = nullptr);

double penalized_objective(const Matrix& x, std::span<const int> y, const Vector& weights, double intercept,
                           double lambda, double alpha);

Vector decision_function(const ElasticNetModel& model, const Matrix& x);

/// Area under the ROC curve with tied scores counted as one half.
double roc_auc(std::span<const int> y, std::span<const double> scores);

/// Mean over samples of weight_f * x_f, then mean over each group's features.
std::vector<double> group_effects(const Vector& weights, const Matrix& x, const FeatureGrouping& grouping);

struct HyperChoice {
  double lambda = 0.0;
  double alpha = 0.0;
  double validation_auc = 0.0;
};

struct EffectReport {
  Matrix per_fold_group_effect;  // folds x J
  std::vector<double> per_fold_auc;
  std::vector<double> grand_mean_effect;
  std::vector<HyperChoice> chosen;
  FeatureGrouping grouping;
  int positive_label = 1;  // original label mapped to class 1

  double mean_auc() const;
  /// Group ids by descending |grand mean effect|; ties keep lower id first.
  std::vector<std::size_t> rank_by_magnitude() const;
};

struct NestedCvOptions {
  int outer_folds = 10;
  int inner_folds = 10;
  double test_fraction = 0.20;
  double validation_fraction = 0.16;
  std::vector<double> alphas = {0.1, 0.5, 0.9};
  std::vector<double> lambdas;  // empty: 10 values log-spaced over [1e-4, 1e1]
  int max_retries = 10;
  unsigned workers = 1;
  ElasticNetOptions optimizer;
};

std::vector<double> default_lambda_grid();

/// Labels must take exactly two values (noise not allowed), each on at least
/// 10 samples; the larger value becomes the positive class.
EffectReport nested_cv_effects(const DataMatrix& x, std::span<const int> labels, const FeatureGrouping& grouping,
                               RandomSeed seed, const NestedCvOptions& options = {});

}  // namespace clex
