#include "clex/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clex/parallel.hpp"

namespace clex {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Problem {
  const Matrix& x;
  std::span<const int> y;
  double l1;  // lambda * alpha
  double l2;  // lambda * (1 - alpha)

  // Smooth part: mean logloss + l2/2 |w|^2.
  double smooth(const Vector& w, double b) const {
    Vector z = (x * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z[i]) - y[static_cast<std::size_t>(i)] * z[i];
    return loss / static_cast<double>(z.size()) + 0.5 * l2 * w.squaredNorm();
  }

  void gradient(const Vector& w, double b, Vector& gw, double& gb) const {
    Vector z = (x * w).array() + b;
    Vector r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = sigmoid(z[i]) - y[static_cast<std::size_t>(i)];
    const double n = static_cast<double>(z.size());
    gw = x.transpose() * r / n + l2 * w;
    gb = r.sum() / n;
  }

  double objective(const Vector& w, double b) const { return smooth(w, b) + l1 * w.lpNorm<1>(); }
};

Vector soft_threshold(const Vector& v, double t) {
  return v.unaryExpr([t](double a) { return a > t ? a - t : (a < -t ? a + t : 0.0); });
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

bool has_both(const std::vector<std::size_t>& idx, const std::vector<int>& y) {
  bool zero = false, one = false;
  for (auto i : idx) (y[i] ? one : zero) = true;
  return zero && one;
}

// Rows in idx, standardized with mean/std of the rows in ref.
struct Standardizer {
  Vector mu;
  Vector sd;

  Standardizer(const Matrix& x, const std::vector<std::size_t>& ref) {
    const auto f = x.cols();
    mu = Vector::Zero(f);
    sd = Vector::Ones(f);
    const double n = static_cast<double>(ref.size());
    for (auto i : ref) mu += x.row(static_cast<Eigen::Index>(i)).transpose();
    mu /= n;
    Vector ss = Vector::Zero(f);
    for (auto i : ref) ss += (x.row(static_cast<Eigen::Index>(i)).transpose() - mu).array().square().matrix();
    for (Eigen::Index c = 0; c < f; ++c) {
      const double s = n > 1 ? std::sqrt(ss[c] / (n - 1)) : 0.0;
      sd[c] = s > 1e-12 ? s : 1.0;
    }
  }

  Matrix apply(const Matrix& x, const std::vector<std::size_t>& idx) const {
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.row(static_cast<Eigen::Index>(r)) =
          ((x.row(static_cast<Eigen::Index>(idx[r])).transpose() - mu).array() / sd.array()).matrix().transpose();
    }
    return out;
  }
};

std::vector<int> take(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y[i]);
  return out;
}

Split random_split(const std::vector<std::size_t>& pool, std::size_t held_out, RandomSeed seed) {
  std::vector<std::size_t> shuffled = pool;
  Rng rng = make_rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  Split s;
  s.test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(held_out));
  s.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(held_out), shuffled.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

}  // namespace

double penalized_objective(const Matrix& x, std::span<const int> y, const Vector& weights, double intercept,
                           double lambda, double alpha) {
  return Problem{x, y, lambda * alpha, lambda * (1.0 - alpha)}.objective(weights, intercept);
}

ElasticNetModel fit_elastic_net_logreg(const Matrix& x, std::span<const int> y, double lambda, double alpha,
                                       const ElasticNetOptions& options, const ElasticNetModel* warm_start) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "label count does not match samples");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size()) ||
      std::any_of(y.begin(), y.end(), [](int v) { return v != 0 && v != 1; })) {
    throw Error(ErrorCode::InvalidArgument, "labels must be 0/1 with both classes present");
  }

  const Problem prob{x, y, lambda * alpha, lambda * (1.0 - alpha)};
  ElasticNetModel m;
  m.lambda = lambda;
  m.alpha = alpha;
  Vector w = Vector::Zero(x.cols());
  double b = std::log(static_cast<double>(positives) / static_cast<double>(y.size() - static_cast<std::size_t>(positives)));
  if (warm_start && warm_start->weights.size() == x.cols()) {
    w = warm_start->weights;
    b = warm_start->intercept;
  }

  // FISTA with backtracking and function-value restart.
  Vector yw = w;
  double yb = b;
  double t = 1.0;
  double step_l = 1.0;
  double f_prev = prob.objective(w, b);
  Vector gw;
  double gb = 0.0;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    prob.gradient(yw, yb, gw, gb);
    const double fy = prob.smooth(yw, yb);
    Vector nw;
    double nb = 0.0;
    for (;;) {
      nw = soft_threshold(yw - gw / step_l, prob.l1 / step_l);
      nb = yb - gb / step_l;
      const Vector dw = nw - yw;
      const double db = nb - yb;
      const double bound = fy + gw.dot(dw) + gb * db + 0.5 * step_l * (dw.squaredNorm() + db * db);
      if (prob.smooth(nw, nb) <= bound + 1e-15 * std::abs(bound)) break;
      step_l *= 2.0;
    }
    const double mapping = step_l * std::max((nw - yw).cwiseAbs().maxCoeff(), std::abs(nb - yb));
    const double f_new = prob.objective(nw, nb);
    if (f_new > f_prev) {
      // restart momentum from the last iterate
      t = 1.0;
      yw = w;
      yb = b;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    yw = nw + ((t - 1.0) / t_next) * (nw - w);
    yb = nb + ((t - 1.0) / t_next) * (nb - b);
    t = t_next;
    w = std::move(nw);
    b = nb;
    f_prev = f_new;
    if (mapping < options.tolerance) {
      m.converged = true;
      ++iter;
      break;
    }
  }
  m.weights = std::move(w);
  m.intercept = b;
  m.iterations = iter;
  m.separation_warning = lambda == 0.0 && !m.converged;
  return m;
}

Vector decision_function(const ElasticNetModel& model, const Matrix& x) {
  return (x * model.weights).array() + model.intercept;
}

double roc_auc(std::span<const int> y, std::span<const double> scores) {
  if (y.size() != scores.size()) throw Error(ErrorCode::DimensionMismatch, "AUC inputs differ in length");
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (y[order[k]]) rank_sum += avg_rank;
    }
    i = j;
  }
  for (int v : y) (v ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::InvalidArgument, "AUC needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<double> group_effects(const Vector& weights, const Matrix& x, const FeatureGrouping& grouping) {
  if (weights.size() != x.cols() || grouping.num_features() != static_cast<std::size_t>(x.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "weights, data and grouping disagree on feature count");
  }
  Vector per_feature = (x.colwise().mean().transpose().array() * weights.array()).matrix();
  std::vector<double> out(grouping.num_groups(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto& cols = grouping.members(j);
    for (auto c : cols) out[j] += per_feature[static_cast<Eigen::Index>(c)];
    out[j] /= static_cast<double>(cols.size());
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) grid[static_cast<std::size_t>(i)] = std::pow(10.0, -4.0 + 5.0 * i / 9.0);
  return grid;
}

double EffectReport::mean_auc() const { return mean(per_fold_auc); }

std::vector<std::size_t> EffectReport::rank_by_magnitude() const {
  std::vector<std::size_t> order(grand_mean_effect.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(grand_mean_effect[a]) > std::abs(grand_mean_effect[b]);
  });
  return order;
}

EffectReport nested_cv_effects(const DataMatrix& data, std::span<const int> labels, const FeatureGrouping& grouping,
                               RandomSeed seed, const NestedCvOptions& options) {
  const Matrix& x = data.values();
  const auto n = data.rows();
  if (labels.size() != n) throw Error(ErrorCode::DimensionMismatch, "label count does not match samples");
  if (grouping.num_features() != data.cols()) throw Error(ErrorCode::DimensionMismatch, "grouping width mismatch");
  std::vector<int> values(labels.begin(), labels.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() != 2 || values.front() < 0) {
    throw Error(ErrorCode::InvalidArgument, "elastic-net baseline needs exactly two non-noise labels");
  }
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == values[1] ? 1 : 0;
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (positives < 10 || n - positives < 10) {
    throw Error(ErrorCode::InvalidArgument, "each class needs at least 10 samples");
  }
  if (options.outer_folds < 1 || options.inner_folds < 1) throw Error(ErrorCode::InvalidArgument, "fold counts must be >= 1");

  auto lambdas = options.lambdas.empty() ? default_lambda_grid() : options.lambdas;
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  auto alphas = options.alphas;
  std::sort(alphas.begin(), alphas.end(), std::greater<>());

  const auto test_size = static_cast<std::size_t>(std::lround(options.test_fraction * static_cast<double>(n)));
  const auto val_size = static_cast<std::size_t>(std::lround(options.validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> everyone(n);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});

  const auto folds = static_cast<std::size_t>(options.outer_folds);
  EffectReport report;
  report.per_fold_group_effect = Matrix::Zero(static_cast<Eigen::Index>(folds), static_cast<Eigen::Index>(grouping.num_groups()));
  report.per_fold_auc.assign(folds, 0.0);
  report.chosen.assign(folds, {});
  report.grouping = grouping;
  report.positive_label = values[1];

  parallel_for(folds, options.workers, [&](std::size_t fold) {
    Split outer;
    bool ok = false;
    for (int retry = 0; retry <= options.max_retries && !ok; ++retry) {
      outer = random_split(everyone, test_size,
                           derive(seed, {stream_tag("nested_cv.outer"), fold, static_cast<std::uint64_t>(retry)}));
      ok = has_both(outer.test, y) && has_both(outer.train, y);
    }
    if (!ok) throw Error(ErrorCode::DegenerateFold, "outer fold " + std::to_string(fold) + " lacks a class");

    // grid[a][l] accumulates validation AUC over inner splits
    std::vector<std::vector<double>> grid(alphas.size(), std::vector<double>(lambdas.size(), 0.0));
    for (int inner = 0; inner < options.inner_folds; ++inner) {
      Split split;
      bool inner_ok = false;
      for (int retry = 0; retry <= options.max_retries && !inner_ok; ++retry) {
        split = random_split(outer.train, val_size,
                             derive(seed, {stream_tag("nested_cv.inner"), fold, static_cast<std::uint64_t>(inner),
                                           static_cast<std::uint64_t>(retry)}));
        inner_ok = has_both(split.test, y) && has_both(split.train, y);
      }
      if (!inner_ok) throw Error(ErrorCode::DegenerateFold, "inner split of fold " + std::to_string(fold) + " lacks a class");
      Standardizer st(x, split.train);
      const Matrix xt = st.apply(x, split.train);
      const Matrix xv = st.apply(x, split.test);
      const auto yt = take(y, split.train);
      const auto yv = take(y, split.test);
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        ElasticNetModel prev;
        const ElasticNetModel* warm = nullptr;
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
          prev = fit_elastic_net_logreg(xt, yt, lambdas[l], alphas[a], options.optimizer, warm);
          warm = &prev;
          const Vector scores = decision_function(prev, xv);
          grid[a][l] += roc_auc(yv, std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
        }
      }
    }

    // Lambdas are descending, so the first strict maximum prefers the larger lambda.
    HyperChoice best{lambdas[0], alphas[0], -1.0};
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        const double auc = grid[a][l] / options.inner_folds;
        if (auc > best.validation_auc) best = {lambdas[l], alphas[a], auc};
      }
    }
    report.chosen[fold] = best;

    Standardizer st(x, outer.train);
    const Matrix xt = st.apply(x, outer.train);
    const Matrix xs = st.apply(x, outer.test);
    const auto model = fit_elastic_net_logreg(xt, take(y, outer.train), best.lambda, best.alpha, options.optimizer);
    const Vector scores = decision_function(model, xs);
    const auto ys = take(y, outer.test);
    report.per_fold_auc[fold] = roc_auc(ys, std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
    const auto effects = group_effects(model.weights, xs, grouping);
    for (std::size_t j = 0; j < effects.size(); ++j) {
      report.per_fold_group_effect(static_cast<Eigen::Index>(fold), static_cast<Eigen::Index>(j)) = effects[j];
    }
  });

  report.grand_mean_effect.resize(grouping.num_groups());
  for (std::size_t j = 0; j < grouping.num_groups(); ++j) {
    report.grand_mean_effect[j] = report.per_fold_group_effect.col(static_cast<Eigen::Index>(j)).mean();
  }
  return report;
}

}  // namespace clex
