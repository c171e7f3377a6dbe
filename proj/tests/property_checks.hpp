#pragma once

// Property checks shared by the doctest suite and the acceptance binary.
// Each returns a list of failure descriptions; empty means the property held.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "clex/datagen.hpp"
#include "clex/explain.hpp"

namespace clex::props {

using Failures = std::vector<std::string>;

inline const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algs{Algorithm::KMeans, Algorithm::GMM, Algorithm::DBScan,
                                           Algorithm::Agglomerative, Algorithm::FuzzyCMeans};
  return algs;
}

inline ClusterParams params_for(Algorithm alg, int clusters) {
  ClusterParams p;
  p.clusters = clusters;
  if (alg == Algorithm::DBScan) {
    p.eps = 0.8;
    p.min_pts = 4;
  }
  return p;
}

// Random instance: z-scored blobs with a few clusters and a random grouping.
struct Instance {
  DataMatrix data;
  FeatureGrouping grouping;
  int clusters;
};

inline Instance random_instance(std::uint64_t seed) {
  Rng rng = make_rng(derive(RandomSeed{seed}, {stream_tag("props.instance")}));
  const int features = 2 + static_cast<int>(rng() % 4);
  const int clusters = 2 + static_cast<int>(rng() % 2);
  SyntheticSpec spec;
  spec.samples_per_cluster = 12 + static_cast<int>(rng() % 10);
  spec.means.resize(clusters, features);
  spec.stds.resize(clusters, features);
  std::uniform_real_distribution<double> loc(-4.0, 4.0), scale(0.3, 1.5);
  for (int c = 0; c < clusters; ++c)
    for (int f = 0; f < features; ++f) {
      spec.means(c, f) = loc(rng);
      spec.stds(c, f) = scale(rng);
    }
  auto data = zscore(generate(spec, RandomSeed{seed}).data);
  const int groups = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(features));
  std::vector<int> group_of(static_cast<std::size_t>(features));
  for (int f = 0; f < features; ++f) group_of[static_cast<std::size_t>(f)] = f < groups ? f : static_cast<int>(rng() % static_cast<std::uint64_t>(groups));
  return {std::move(data), FeatureGrouping(group_of), clusters};
}

inline Failures constant_group_zero_importance(int instances) {
  Failures out;
  for (int s = 0; s < instances; ++s) {
    auto inst = random_instance(static_cast<std::uint64_t>(s));
    Matrix m = inst.data.values();
    // append a constant feature in its own group
    Matrix wide(m.rows(), m.cols() + 1);
    wide << m, Vector::Constant(m.rows(), 0.75);
    DataMatrix data(wide);
    auto group_of = inst.grouping.group_of();
    const int constant_group = static_cast<int>(inst.grouping.num_groups());
    group_of.push_back(constant_group);
    FeatureGrouping grouping(group_of);
    std::vector<int> truth(static_cast<std::size_t>(wide.rows()));
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = static_cast<int>(i * static_cast<std::size_t>(inst.clusters) / truth.size());
    for (auto alg : all_algorithms()) {
      auto model = fit(alg, data, params_for(alg, inst.clusters), RandomSeed{static_cast<std::uint64_t>(s)});
      if (model.all_noise()) continue;
      const std::string where = std::string(to_string(alg)) + " instance " + std::to_string(s);
      ExplainOptions opts{10, 1};
      auto g = g2pc(model, data, grouping, RandomSeed{1}, opts);
      if (g.pct_change.row(constant_group).cwiseAbs().maxCoeff() != 0.0) out.push_back("g2pc nonzero, " + where);
      auto l = l2pc(model, data, grouping, RandomSeed{1}, 4, {3, 1});
      for (std::size_t pos = 0; pos < l.samples.size(); ++pos)
        for (int k = 0; k < 3; ++k)
          if (l.at(pos, static_cast<std::size_t>(constant_group), static_cast<std::size_t>(k)) != 0.0) {
            out.push_back("l2pc nonzero, " + where);
            pos = l.samples.size();
            break;
          }
      const auto base = model.train_labels().labels();
      Predictor predict = [&model](const Matrix& x) { return assign(model, x).labels(); };
      auto p = permutation_feature_importance(predict, data, base, grouping, accuracy, RandomSeed{1}, opts);
      if (p.importance.row(constant_group).cwiseAbs().maxCoeff() != 0.0) out.push_back("pfi nonzero, " + where);
    }
  }
  return out;
}

inline Failures percent_change_in_unit_interval(int instances) {
  Failures out;
  for (int s = 0; s < instances; ++s) {
    auto inst = random_instance(100 + static_cast<std::uint64_t>(s));
    for (auto alg : all_algorithms()) {
      auto model = fit(alg, inst.data, params_for(alg, inst.clusters), RandomSeed{static_cast<std::uint64_t>(s)});
      if (model.all_noise()) continue;
      const std::string where = std::string(to_string(alg)) + " instance " + std::to_string(s);
      auto g = g2pc(model, inst.data, inst.grouping, RandomSeed{2}, {15, 1});
      if (g.pct_change.minCoeff() < 0.0 || g.pct_change.maxCoeff() > 1.0) out.push_back("g2pc out of range, " + where);
      auto l = l2pc(model, inst.data, inst.grouping, RandomSeed{2}, 5, {4, 1});
      for (double v : l.values)
        if (v < 0.0 || v > 1.0) {
          out.push_back("l2pc out of range, " + where);
          break;
        }
    }
  }
  return out;
}

inline Failures l2pc_granularity(int instances) {
  Failures out;
  for (int s = 0; s < instances; ++s) {
    auto inst = random_instance(200 + static_cast<std::uint64_t>(s));
    const int m = 1 + s % 9;
    auto model = fit(Algorithm::KMeans, inst.data, params_for(Algorithm::KMeans, inst.clusters), RandomSeed{3});
    auto l = l2pc(model, inst.data, inst.grouping, RandomSeed{static_cast<std::uint64_t>(s)}, m, {5, 1});
    for (double v : l.values) {
      const double scaled = v * m;
      if (std::abs(scaled - std::round(scaled)) > 1e-12) {
        out.push_back("value " + std::to_string(v) + " not a multiple of 1/" + std::to_string(m));
        break;
      }
    }
  }
  return out;
}

inline Failures zscore_idempotent(int instances) {
  Failures out;
  for (int s = 0; s < instances; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    const Eigen::Index rows = 3 + static_cast<Eigen::Index>(rng() % 50), cols = 1 + static_cast<Eigen::Index>(rng() % 6);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double a = scale(rng), b = n(rng) * 100;
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = a * n(rng) + b;
    }
    auto z = zscore(DataMatrix(m));
    auto zz = zscore(z);
    if ((zz.values() - z.values()).cwiseAbs().maxCoeff() > 1e-9) out.push_back("instance " + std::to_string(s));
  }
  return out;
}

inline Failures gmm_posteriors_normalized(int instances) {
  Failures out;
  for (int s = 0; s < instances; ++s) {
    auto inst = random_instance(300 + static_cast<std::uint64_t>(s));
    auto model = fit(Algorithm::GMM, inst.data, params_for(Algorithm::GMM, inst.clusters), RandomSeed{4});
    // far-away probes stress the log-sum-exp path
    Matrix probe(inst.data.values().rows() + 2, inst.data.values().cols());
    probe << inst.data.values(), Matrix::Constant(1, probe.cols(), 40.0), Matrix::Constant(1, probe.cols(), -40.0);
    Matrix post = gmm_posteriors(model, probe);
    for (Eigen::Index i = 0; i < post.rows(); ++i) {
      if (std::abs(post.row(i).sum() - 1.0) > 1e-9 || post.row(i).minCoeff() < 0.0) {
        out.push_back("instance " + std::to_string(s) + " row " + std::to_string(i));
        break;
      }
    }
    auto fcm = fit(Algorithm::FuzzyCMeans, inst.data, params_for(Algorithm::FuzzyCMeans, inst.clusters), RandomSeed{4});
    Matrix u = fuzzy_memberships(fcm, probe);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u.row(i).sum() - 1.0) > 1e-9 || u.row(i).minCoeff() < 0.0) {
        out.push_back("fcm instance " + std::to_string(s) + " row " + std::to_string(i));
        break;
      }
    }
  }
  return out;
}

// Exact ties (a probe equidistant from two clusters) go to the lower cluster
// id, and repeated calls give identical answers.
inline Failures assign_ties_deterministic() {
  Failures out;
  Matrix train(6, 1);
  train << 0, 1, 2, 10, 11, 12;
  DataMatrix data(train);
  Matrix probe(1, 1);
  probe << 6.0;

  std::vector<std::pair<std::string, FittedClusterer>> models;
  models.emplace_back("kmeans", FittedClusterer(Algorithm::KMeans, ClusterParams{}, 1, 2,
                                                KMeansState{(Matrix(2, 1) << 1.0, 11.0).finished()},
                                                ClusterAssignment({0, 0, 0, 1, 1, 1}, 2), true, 1));
  GmmState g;
  g.weights = Vector::Constant(2, 0.5);
  g.means = (Matrix(2, 1) << 1.0, 11.0).finished();
  g.covariances = {Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  g.cholesky = g.covariances;
  g.log_det = Vector::Zero(2);
  models.emplace_back("gmm", FittedClusterer(Algorithm::GMM, ClusterParams{}, 1, 2, g,
                                             ClusterAssignment({0, 0, 0, 1, 1, 1}, 2), true, 1));
  models.emplace_back("fuzzy_cmeans",
                      FittedClusterer(Algorithm::FuzzyCMeans, ClusterParams{}, 1, 2,
                                      FuzzyState{(Matrix(2, 1) << 1.0, 11.0).finished()},
                                      ClusterAssignment({0, 0, 0, 1, 1, 1}, 2), true, 1));
  ClusterParams db;
  db.eps = 5.0;
  db.min_pts = 2;
  models.emplace_back("dbscan", fit(Algorithm::DBScan, data, db, RandomSeed{0}));
  ClusterParams ag;
  ag.clusters = 2;
  models.emplace_back("agglomerative", fit(Algorithm::Agglomerative, data, ag, RandomSeed{0}));

  for (const auto& [name, model] : models) {
    const auto first = assign(model, probe);
    for (int r = 0; r < 5; ++r)
      if (!(assign(model, probe) == first)) out.push_back(name + ": repeated assign differs");
    const int lower = model.train_labels()[2];  // cluster of the nearest point below the probe
    const int upper = model.train_labels()[3];
    if (first[0] != std::min(lower, upper)) out.push_back(name + ": tie went to " + std::to_string(first[0]));
  }
  return out;
}

}  // namespace clex::props
