#include "clex/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace clex {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// Index of the smallest squared distance from a.row(i) to the rows of b; ties to the lowest index.
std::pair<Eigen::Index, double> nearest_row(const Matrix& a, Eigen::Index i, const Matrix& b) {
  Eigen::Index best = -1;
  double best_d = kInf;
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    const double d = sq_dist(a, i, b, j);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return {best, best_d};
}

std::vector<int> nearest_center_labels(const Matrix& data, const Matrix& centers) {
  std::vector<int> labels(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int>(nearest_row(data, i, centers).first);
  }
  return labels;
}

double sse(const Matrix& data, const Matrix& centers, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) total += sq_dist(data, i, centers, labels[static_cast<std::size_t>(i)]);
  return total;
}

void check_count(const ClusterParams& p, std::size_t n) {
  if (p.clusters < 2 || static_cast<std::size_t>(p.clusters) > n) {
    throw Error(ErrorCode::InvalidArgument,
                "cluster count must satisfy 2 <= C <= N, got C=" + std::to_string(p.clusters));
  }
}

// ---- k-means --------------------------------------------------------------

struct KMeansFit {
  Matrix centers;
  std::vector<int> labels;
  double sse = kInf;
};

KMeansFit kmeans_fit(const Matrix& data, int clusters, int restarts, int max_iter, RandomSeed seed) {
  KMeansFit best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = make_rng(derive(seed, {stream_tag("kmeans.restart"), static_cast<std::uint64_t>(r)}));
    Matrix centers = detail::kmeans_plus_plus(data, clusters, rng);
    std::vector<int> labels;
    if (!detail::lloyd(data, centers, labels, max_iter)) continue;
    const double cost = sse(data, centers, labels);
    if (cost < best.sse) best = {std::move(centers), std::move(labels), cost};
  }
  if (best.labels.empty()) {
    throw Error(ErrorCode::DegenerateCluster, "every k-means restart produced an empty cluster");
  }
  return best;
}

// ---- GMM ------------------------------------------------------------------

Matrix gmm_log_joint(const GmmState& g, const Matrix& x) {
  const auto c = g.weights.size();
  const double f = static_cast<double>(x.cols());
  Matrix out(x.rows(), c);
  for (Eigen::Index k = 0; k < c; ++k) {
    Matrix centered = x.rowwise() - g.means.row(k);
    // solve L y = centered^T
    Matrix y = g.cholesky[static_cast<std::size_t>(k)].triangularView<Eigen::Lower>().solve(centered.transpose());
    Vector maha = y.colwise().squaredNorm().transpose();
    const double base = std::log(g.weights[k]) - 0.5 * (f * std::log(2.0 * std::numbers::pi) + g.log_det[k]);
    out.col(k) = (base - 0.5 * maha.array()).matrix();
  }
  return out;
}

// Row-wise softmax of log joint; returns per-row log-sum-exp.
Vector normalize_rows(Matrix& log_joint) {
  Vector lse(log_joint.rows());
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double m = log_joint.row(i).maxCoeff();
    const double s = (log_joint.row(i).array() - m).exp().sum();
    lse[i] = m + std::log(s);
    log_joint.row(i) = (log_joint.row(i).array() - lse[i]).exp().matrix();
  }
  return lse;
}

GmmState gmm_m_step(const Matrix& x, const Matrix& resp, double reg) {
  const auto c = resp.cols();
  const auto f = x.cols();
  GmmState g;
  Vector nk = resp.colwise().sum().transpose();
  g.weights = nk / static_cast<double>(x.rows());
  g.means.resize(c, f);
  g.log_det.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    if (!(nk[k] > 10.0 * std::numeric_limits<double>::min())) {
      throw Error(ErrorCode::DegenerateCluster, "GMM component " + std::to_string(k) + " lost all responsibility");
    }
    g.means.row(k) = (resp.col(k).transpose() * x) / nk[k];
    Matrix centered = x.rowwise() - g.means.row(k);
    Matrix cov = (centered.transpose() * resp.col(k).asDiagonal() * centered) / nk[k];
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += reg;
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::DegenerateCluster, "GMM covariance " + std::to_string(k) + " is not positive-definite");
    }
    Matrix l = llt.matrixL();
    g.log_det[k] = 2.0 * l.diagonal().array().log().sum();
    g.covariances.push_back(std::move(cov));
    g.cholesky.push_back(std::move(l));
  }
  return g;
}

// ---- DBScan ---------------------------------------------------------------

std::vector<std::vector<std::size_t>> eps_neighbors(const Matrix& x, double eps) {
  const double eps2 = eps * eps;
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sq_dist(x, static_cast<Eigen::Index>(i), x, static_cast<Eigen::Index>(j)) <= eps2) nb[i].push_back(j);
    }
  }
  return nb;
}

// ---- Ward -----------------------------------------------------------------

std::vector<int> ward_labels(const Matrix& x, int clusters) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i * n + j] = d[j * n + i] = sq_dist(x, static_cast<Eigen::Index>(i), x, static_cast<Eigen::Index>(j));
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);

  for (std::size_t remaining = n; remaining > static_cast<std::size_t>(clusters); --remaining) {
    std::size_t bi = 0, bj = 0;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && d[i * n + j] < best) {
          best = d[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    // Lance-Williams update for Ward on squared Euclidean distances; bj merges into bi.
    const double ni = static_cast<double>(size[bi]);
    const double nj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = static_cast<double>(size[k]);
      const double v = ((ni + nk) * d[bi * n + k] + (nj + nk) * d[bj * n + k] - nk * best) / (ni + nj + nk);
      d[bi * n + k] = d[k * n + bi] = v;
    }
    size[bi] += size[bj];
    active[bj] = false;
    parent[bj] = bi;
  }

  auto root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  std::vector<int> labels(n, -1);
  std::vector<int> id_of_root(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = root(i);
    if (id_of_root[r] < 0) id_of_root[r] = next++;
    labels[i] = id_of_root[r];
  }
  return labels;
}

// ---- fuzzy c-means --------------------------------------------------------

Matrix memberships(const Matrix& x, const Matrix& centers, double m) {
  const auto c = centers.rows();
  Matrix u(x.rows(), c);
  const double power = 1.0 / (m - 1.0);  // applied to squared distances
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Vector d2(c);
    Eigen::Index zero_at = -1;
    for (Eigen::Index k = 0; k < c; ++k) {
      d2[k] = sq_dist(x, i, centers, k);
      if (d2[k] == 0.0 && zero_at < 0) zero_at = k;
    }
    if (zero_at >= 0) {
      u.row(i).setZero();
      u(i, zero_at) = 1.0;
      continue;
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < c; ++l) s += std::pow(d2[k] / d2[l], power);
      u(i, k) = 1.0 / s;
    }
    u.row(i) /= u.row(i).sum();
  }
  return u;
}

Matrix fuzzy_centers(const Matrix& x, const Matrix& u, double m) {
  Matrix um = u.array().pow(m).matrix();
  Matrix centers = um.transpose() * x;
  Vector mass = um.colwise().sum().transpose();
  for (Eigen::Index k = 0; k < centers.rows(); ++k) centers.row(k) /= mass[k];
  return centers;
}

int argmax_row(const Matrix& m, Eigen::Index i) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < m.cols(); ++k) {
    if (m(i, k) > m(i, best)) best = k;
  }
  return static_cast<int>(best);
}

int count_clusters(const std::vector<int>& labels) {
  int c = 0;
  for (int l : labels) c = std::max(c, l + 1);
  return c;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::KMeans: return "kmeans";
    case Algorithm::GMM: return "gmm";
    case Algorithm::DBScan: return "dbscan";
    case Algorithm::Agglomerative: return "agglomerative";
    case Algorithm::FuzzyCMeans: return "fuzzy_cmeans";
  }
  return "unknown";
}

const std::vector<std::string>& algorithm_tags() {
  static const std::vector<std::string> tags = {"kmeans", "gmm", "dbscan", "agglomerative", "fuzzy_cmeans"};
  return tags;
}

Algorithm parse_algorithm(std::string_view tag) {
  for (auto a : {Algorithm::KMeans, Algorithm::GMM, Algorithm::DBScan, Algorithm::Agglomerative,
                 Algorithm::FuzzyCMeans}) {
    if (to_string(a) == tag) return a;
  }
  std::string valid;
  for (const auto& t : algorithm_tags()) valid += (valid.empty() ? "" : ", ") + t;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(tag) + "' (valid: " + valid + ")");
}

bool uses_cluster_count(Algorithm algorithm) { return algorithm != Algorithm::DBScan; }

FittedClusterer::FittedClusterer(Algorithm algorithm, ClusterParams params, std::size_t num_features,
                                 int num_clusters, ClustererState state, ClusterAssignment train_labels,
                                 bool converged, int iterations)
    : algorithm_(algorithm),
      params_(params),
      num_features_(num_features),
      num_clusters_(num_clusters),
      state_(std::move(state)),
      train_labels_(std::move(train_labels)),
      converged_(converged),
      iterations_(iterations) {}

std::vector<std::string> FittedClusterer::warnings() const {
  std::vector<std::string> w;
  if (!converged_) w.emplace_back("NonConvergence");
  if (all_noise()) w.emplace_back("AllNoise");
  return w;
}

namespace detail {

Matrix kmeans_plus_plus(const Matrix& data, int clusters, Rng& rng) {
  const auto n = data.rows();
  Matrix centers(clusters, data.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = data.row(pick(rng));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = sq_dist(data, i, centers, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < clusters; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = data.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(data, i, centers, c));
  }
  return centers;
}

bool lloyd(const Matrix& data, Matrix& centers, std::vector<int>& labels, int max_iter,
           std::vector<double>* sse_trace) {
  labels = nearest_center_labels(data, centers);
  if (sse_trace) sse_trace->push_back(sse(data, centers, labels));
  const auto c = centers.rows();
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix sums = Matrix::Zero(c, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(c), 0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const auto l = labels[static_cast<std::size_t>(i)];
      sums.row(l) += data.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    for (Eigen::Index k = 0; k < c; ++k) {
      if (counts[static_cast<std::size_t>(k)] == 0) return false;
      centers.row(k) = sums.row(k) / counts[static_cast<std::size_t>(k)];
    }
    auto next = nearest_center_labels(data, centers);
    if (sse_trace) sse_trace->push_back(sse(data, centers, next));
    if (next == labels) break;
    labels = std::move(next);
  }
  return true;
}

}  // namespace detail

FittedClusterer fit(Algorithm algorithm, const DataMatrix& data, const ClusterParams& params, RandomSeed seed) {
  const Matrix& x = data.values();
  const auto n = data.rows();
  const auto f = data.cols();

  switch (algorithm) {
    case Algorithm::KMeans: {
      check_count(params, n);
      auto km = kmeans_fit(x, params.clusters, params.kmeans_restarts, params.kmeans_max_iter, seed);
      FittedClusterer model(algorithm, params, f, params.clusters, KMeansState{std::move(km.centers)},
                            ClusterAssignment{}, true, 0);
      auto labels = assign(model, x);
      return FittedClusterer(algorithm, params, f, params.clusters, model.state(), std::move(labels), true, 0);
    }

    case Algorithm::GMM: {
      if (params.clusters < 1 || static_cast<std::size_t>(params.clusters) > n) {
        throw Error(ErrorCode::InvalidArgument, "GMM component count must satisfy 1 <= C <= N");
      }
      Matrix resp = Matrix::Zero(x.rows(), params.clusters);
      if (params.clusters == 1) {
        resp.setOnes();
      } else {
        auto km = kmeans_fit(x, params.clusters, params.kmeans_restarts, params.kmeans_max_iter,
                             derive(seed, {stream_tag("gmm.init")}));
        for (Eigen::Index i = 0; i < x.rows(); ++i) resp(i, km.labels[static_cast<std::size_t>(i)]) = 1.0;
      }
      GmmState g = gmm_m_step(x, resp, params.gmm_reg_covar);
      double prev = -kInf;
      bool converged = false;
      int iter = 0;
      while (iter < params.gmm_max_iter) {
        ++iter;
        resp = gmm_log_joint(g, x);
        const double ll = normalize_rows(resp).mean();
        g = gmm_m_step(x, resp, params.gmm_reg_covar);
        if (std::abs(ll - prev) < params.gmm_tolerance) {
          converged = true;
          break;
        }
        prev = ll;
      }
      FittedClusterer model(algorithm, params, f, params.clusters, std::move(g), ClusterAssignment{}, converged, iter);
      auto labels = assign(model, x);
      return FittedClusterer(algorithm, params, f, params.clusters, model.state(), std::move(labels), converged, iter);
    }

    case Algorithm::DBScan: {
      if (!(params.eps > 0.0) || params.min_pts < 1) {
        throw Error(ErrorCode::InvalidArgument, "DBScan requires eps > 0 and min_pts >= 1");
      }
      const auto nb = eps_neighbors(x, params.eps);
      std::vector<bool> is_core(n);
      for (std::size_t i = 0; i < n; ++i) is_core[i] = nb[i].size() >= static_cast<std::size_t>(params.min_pts);

      // Clusters are connected components of the core graph, numbered by their lowest core index.
      std::vector<int> core_label(n, ClusterAssignment::kNoise);
      int next = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!is_core[i] || core_label[i] != ClusterAssignment::kNoise) continue;
        std::vector<std::size_t> stack{i};
        core_label[i] = next;
        while (!stack.empty()) {
          auto p = stack.back();
          stack.pop_back();
          for (auto q : nb[p]) {
            if (is_core[q] && core_label[q] == ClusterAssignment::kNoise) {
              core_label[q] = next;
              stack.push_back(q);
            }
          }
        }
        ++next;
      }

      DbscanState s;
      s.train = x;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_core[i]) s.core_indices.push_back(i);
      }
      s.core_points.resize(static_cast<Eigen::Index>(s.core_indices.size()), x.cols());
      for (std::size_t k = 0; k < s.core_indices.size(); ++k) {
        s.core_points.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(s.core_indices[k]));
        s.core_labels.push_back(core_label[s.core_indices[k]]);
      }
      // Border points take the label of their nearest core, which is exactly the assignment rule.
      FittedClusterer model(algorithm, params, f, next, std::move(s), ClusterAssignment{}, true, 0);
      auto labels = assign(model, x);
      return FittedClusterer(algorithm, params, f, next, model.state(), std::move(labels), true, 0);
    }

    case Algorithm::Agglomerative: {
      check_count(params, n);
      auto labels = ward_labels(x, params.clusters);
      AgglomerativeState s{x, labels};
      return FittedClusterer(algorithm, params, f, params.clusters, std::move(s),
                             ClusterAssignment(std::move(labels), params.clusters), true, 0);
    }

    case Algorithm::FuzzyCMeans: {
      check_count(params, n);
      if (!(params.fuzzifier > 1.0)) throw Error(ErrorCode::InvalidArgument, "fuzzifier m must be > 1");
      Rng rng = make_rng(derive(seed, {stream_tag("fcm.init")}));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Matrix u(x.rows(), params.clusters);
      for (Eigen::Index i = 0; i < u.rows(); ++i) {
        for (Eigen::Index k = 0; k < u.cols(); ++k) u(i, k) = unit(rng);
        u.row(i) /= u.row(i).sum();
      }
      Matrix centers;
      bool converged = false;
      int iter = 0;
      while (iter < params.fcm_max_iter) {
        ++iter;
        centers = fuzzy_centers(x, u, params.fuzzifier);
        Matrix next = memberships(x, centers, params.fuzzifier);
        const double change = (next - u).norm();
        u = std::move(next);
        if (change < params.fcm_tolerance) {
          converged = true;
          break;
        }
      }
      FittedClusterer model(algorithm, params, f, params.clusters, FuzzyState{centers}, ClusterAssignment{},
                            converged, iter);
      auto labels = assign(model, x);
      return FittedClusterer(algorithm, params, f, params.clusters, model.state(), std::move(labels), converged,
                             iter);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

ClusterAssignment assign(const FittedClusterer& model, const Matrix& samples) {
  if (static_cast<std::size_t>(samples.cols()) != model.num_features()) {
    throw Error(ErrorCode::DimensionMismatch, "samples have " + std::to_string(samples.cols()) +
                                                  " features, model expects " +
                                                  std::to_string(model.num_features()));
  }
  const auto n = static_cast<std::size_t>(samples.rows());
  std::vector<int> labels(n);
  std::visit(
      overloaded{
          [&](const KMeansState& s) { labels = nearest_center_labels(samples, s.centers); },
          [&](const GmmState& s) {
            Matrix lj = gmm_log_joint(s, samples);
            for (Eigen::Index i = 0; i < samples.rows(); ++i) labels[static_cast<std::size_t>(i)] = argmax_row(lj, i);
          },
          [&](const DbscanState& s) {
            const double eps2 = model.params().eps * model.params().eps;
            for (Eigen::Index i = 0; i < samples.rows(); ++i) {
              auto [k, d2] = nearest_row(samples, i, s.core_points);
              labels[static_cast<std::size_t>(i)] =
                  (k >= 0 && d2 <= eps2) ? s.core_labels[static_cast<std::size_t>(k)] : ClusterAssignment::kNoise;
            }
          },
          [&](const AgglomerativeState& s) {
            for (Eigen::Index i = 0; i < samples.rows(); ++i) {
              labels[static_cast<std::size_t>(i)] =
                  s.train_labels[static_cast<std::size_t>(nearest_row(samples, i, s.train).first)];
            }
          },
          [&](const FuzzyState& s) {
            Matrix u = memberships(samples, s.centers, model.params().fuzzifier);
            for (Eigen::Index i = 0; i < samples.rows(); ++i) labels[static_cast<std::size_t>(i)] = argmax_row(u, i);
          },
      },
      model.state());
  return ClusterAssignment(std::move(labels), model.num_clusters());
}

Matrix gmm_posteriors(const FittedClusterer& model, const Matrix& samples) {
  const auto* s = std::get_if<GmmState>(&model.state());
  if (!s) throw Error(ErrorCode::InvalidArgument, "posteriors require a GMM model");
  if (static_cast<std::size_t>(samples.cols()) != model.num_features()) {
    throw Error(ErrorCode::DimensionMismatch, "sample width does not match model");
  }
  Matrix lj = gmm_log_joint(*s, samples);
  normalize_rows(lj);
  return lj;
}

Matrix fuzzy_memberships(const FittedClusterer& model, const Matrix& samples) {
  const auto* s = std::get_if<FuzzyState>(&model.state());
  if (!s) throw Error(ErrorCode::InvalidArgument, "memberships require a fuzzy c-means model");
  if (static_cast<std::size_t>(samples.cols()) != model.num_features()) {
    throw Error(ErrorCode::DimensionMismatch, "sample width does not match model");
  }
  return memberships(samples, s->centers, model.params().fuzzifier);
}

double silhouette_score(const DataMatrix& data, const ClusterAssignment& labels) {
  const Matrix& x = data.values();
  if (labels.size() != data.rows()) throw Error(ErrorCode::DimensionMismatch, "label count does not match samples");
  const int c = std::max(labels.num_clusters(), count_clusters(labels.labels()));
  std::vector<std::size_t> sizes(static_cast<std::size_t>(c), 0);
  for (int l : labels.labels()) {
    if (l != ClusterAssignment::kNoise) ++sizes[static_cast<std::size_t>(l)];
  }
  const auto nonempty = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (nonempty < 2) throw Error(ErrorCode::InsufficientClusters, "silhouette needs at least 2 non-noise clusters");

  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> sums(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int li = labels[static_cast<std::size_t>(i)];
    if (li == ClusterAssignment::kNoise) continue;
    ++counted;
    if (sizes[static_cast<std::size_t>(li)] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      const int lj = labels[static_cast<std::size_t>(j)];
      if (lj == ClusterAssignment::kNoise || j == i) continue;
      sums[static_cast<std::size_t>(lj)] += std::sqrt(sq_dist(x, i, x, j));
    }
    const double a = sums[static_cast<std::size_t>(li)] / static_cast<double>(sizes[static_cast<std::size_t>(li)] - 1);
    double b = kInf;
    for (int k = 0; k < c; ++k) {
      if (k == li || sizes[static_cast<std::size_t>(k)] == 0) continue;
      b = std::min(b, sums[static_cast<std::size_t>(k)] / static_cast<double>(sizes[static_cast<std::size_t>(k)]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(counted);
}

SilhouetteReport select_clusters(Algorithm algorithm, const DataMatrix& data, const std::vector<double>& candidates,
                                 const ClusterParams& base, RandomSeed seed) {
  SilhouetteReport report;
  bool all_noise = true;
  double best = -kInf;
  for (double value : candidates) {
    ClusterParams p = base;
    if (uses_cluster_count(algorithm)) {
      p.clusters = static_cast<int>(value);
    } else {
      p.eps = value;
    }
    SilhouetteCandidate cand{value, -kInf, 0};
    try {
      auto model = fit(algorithm, data, p, seed);
      const auto& labels = model.train_labels();
      if (!labels.all_noise()) all_noise = false;
      std::vector<bool> used(static_cast<std::size_t>(model.num_clusters()), false);
      for (int l : labels.labels()) {
        if (l != ClusterAssignment::kNoise) used[static_cast<std::size_t>(l)] = true;
      }
      cand.clusters_found = static_cast<int>(std::count(used.begin(), used.end(), true));
      if (cand.clusters_found >= 2) cand.score = silhouette_score(data, labels);
    } catch (const Error&) {
      all_noise = false;
    }
    report.candidates.push_back(cand);
  }
  // Smallest parameter wins ties regardless of the order candidates were given in.
  for (const auto& cand : report.candidates) {
    if (cand.score == -kInf) continue;
    if (cand.score > best || (cand.score == best && cand.parameter < *report.selected)) {
      best = cand.score;
      report.selected = cand.parameter;
    }
  }
  if (!report.selected) {
    report.status = (algorithm == Algorithm::DBScan && all_noise) ? SelectionStatus::AllNoise
                                                                  : SelectionStatus::NoValidCandidate;
  }
  return report;
}

std::vector<double> dbscan_eps_grid(const DataMatrix& data, int min_pts, int count) {
  const Matrix& x = data.values();
  const auto n = x.rows();
  if (min_pts < 1 || min_pts >= n) {
    throw Error(ErrorCode::InvalidArgument, "eps grid needs 1 <= min_pts < N");
  }
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "eps grid needs at least one value");
  std::vector<double> kdist(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row[w++] = std::sqrt(sq_dist(x, i, x, j));
    }
    std::nth_element(row.begin(), row.begin() + (min_pts - 1), row.end());
    kdist[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(min_pts - 1)];
  }
  std::sort(kdist.begin(), kdist.end());
  auto percentile = [&](double q) {
    const double pos = q * static_cast<double>(kdist.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, kdist.size() - 1);
    return kdist[lo] + (pos - static_cast<double>(lo)) * (kdist[hi] - kdist[lo]);
  };
  double lo = percentile(0.01);
  const double hi = percentile(0.99);
  if (!(hi > 0.0)) throw Error(ErrorCode::InvalidArgument, "all k-nearest-neighbor distances are zero");
  if (!(lo > 0.0)) lo = hi * 1e-3;
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  grid.back() = hi;
  return grid;
}

}  // namespace clex
