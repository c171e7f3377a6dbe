#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "clex/core.hpp"
#include "clex/random.hpp"

namespace clex {

enum class Algorithm { KMeans, GMM, DBScan, Agglomerative, FuzzyCMeans };

std::string_view to_string(Algorithm algorithm);
/// Accepts the tags kmeans, gmm, dbscan, agglomerative, fuzzy_cmeans.
Algorithm parse_algorithm(std::string_view tag);
const std::vector<std::string>& algorithm_tags();
bool uses_cluster_count(Algorithm algorithm);

struct ClusterParams {
  int clusters = 2;

  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;

  double gmm_tolerance = 1e-6;
  int gmm_max_iter = 500;
  double gmm_reg_covar = 1e-6;

  double eps = 0.5;
  int min_pts = 4;

  double fuzzifier = 2.0;
  double fcm_tolerance = 0.005;
  int fcm_max_iter = 1000;
};

struct KMeansState {
  Matrix centers;  // C x F
};

struct GmmState {
  Vector weights;                    // C
  Matrix means;                      // C x F
  std::vector<Matrix> covariances;   // C of F x F, floor already added
  std::vector<Matrix> cholesky;      // lower factors of covariances
  Vector log_det;                    // log |Sigma_c|
};

struct DbscanState {
  Matrix train;                     // N x F
  std::vector<std::size_t> core_indices;
  Matrix core_points;               // rows of train at core_indices
  std::vector<int> core_labels;
};

struct AgglomerativeState {
  Matrix train;
  std::vector<int> train_labels;
};

struct FuzzyState {
  Matrix centers;
};

using ClustererState = std::variant<KMeansState, GmmState, DbscanState, AgglomerativeState, FuzzyState>;

/// Frozen clustering model able to place new samples into its clusters.
/// Immutable after construction; safe to share between threads.
class FittedClusterer {
 public:
  FittedClusterer(Algorithm algorithm, ClusterParams params, std::size_t num_features, int num_clusters,
                  ClustererState state, ClusterAssignment train_labels, bool converged, int iterations);

  Algorithm algorithm() const noexcept { return algorithm_; }
  const ClusterParams& params() const noexcept { return params_; }
  std::size_t num_features() const noexcept { return num_features_; }
  int num_clusters() const noexcept { return num_clusters_; }
  const ClustererState& state() const noexcept { return state_; }
  const ClusterAssignment& train_labels() const noexcept { return train_labels_; }
  /// False when GMM/FCM hit the iteration cap before meeting tolerance.
  bool converged() const noexcept { return converged_; }
  int iterations() const noexcept { return iterations_; }
  bool all_noise() const noexcept { return num_clusters_ == 0; }
  std::vector<std::string> warnings() const;

 private:
  Algorithm algorithm_;
  ClusterParams params_;
  std::size_t num_features_;
  int num_clusters_;
  ClustererState state_;
  ClusterAssignment train_labels_;
  bool converged_;
  int iterations_;
};

FittedClusterer fit(Algorithm algorithm, const DataMatrix& data, const ClusterParams& params, RandomSeed seed);

/// Places each row of `samples` into one of the model's clusters (or NOISE for DBScan).
ClusterAssignment assign(const FittedClusterer& model, const Matrix& samples);
inline ClusterAssignment assign(const FittedClusterer& model, const DataMatrix& samples) {
  return assign(model, samples.values());
}

/// GMM posterior probabilities, N x C, rows sum to 1.
Matrix gmm_posteriors(const FittedClusterer& model, const Matrix& samples);
/// Fuzzy c-means memberships with the model's frozen centers, N x C, rows sum to 1.
Matrix fuzzy_memberships(const FittedClusterer& model, const Matrix& samples);

/// Mean silhouette over non-noise samples; singleton-cluster samples score 0.
double silhouette_score(const DataMatrix& data, const ClusterAssignment& labels);

struct SilhouetteCandidate {
  double parameter = 0.0;
  double score = 0.0;  // -inf when the candidate cannot be scored
  int clusters_found = 0;
};

enum class SelectionStatus { Ok, AllNoise, NoValidCandidate };

struct SilhouetteReport {
  std::vector<SilhouetteCandidate> candidates;
  std::optional<double> selected;
  SelectionStatus status = SelectionStatus::Ok;
};

/// Fits once per candidate (cluster count, or eps for DBScan) and keeps the
/// best mean silhouette; ties go to the smallest parameter value.
SilhouetteReport select_clusters(Algorithm algorithm, const DataMatrix& data, const std::vector<double>& candidates,
                                 const ClusterParams& base, RandomSeed seed);

/// Log-spaced eps candidates between the 1st and 99th percentile of each
/// sample's distance to its min_pts-th nearest other sample.
std::vector<double> dbscan_eps_grid(const DataMatrix& data, int min_pts, int count = 20);

namespace detail {

/// Lloyd iterations from given centers. Appends the SSE after every
/// assignment step to `sse_trace` when provided. Returns false when a
/// cluster emptied.
bool lloyd(const Matrix& data, Matrix& centers, std::vector<int>& labels, int max_iter,
           std::vector<double>* sse_trace = nullptr);

Matrix kmeans_plus_plus(const Matrix& data, int clusters, Rng& rng);

}  // namespace detail

}  // namespace clex
