#include "clex/serialize.hpp"

#include <cmath>

#include "clex/io.hpp"

namespace clex {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json stats_to_json(const GroupStats& s) {
  return Json{{"mean", s.mean}, {"median", s.median}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

Json summary_to_json(const std::vector<SummaryRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json row = stats_to_json(r.stats);
    row["group"] = r.group;
    row["label"] = r.label;
    out.push_back(std::move(row));
  }
  return out;
}

const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("model document lacks '") + key + "'");
  return j.at(key);
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = require(j, "rows").get<Eigen::Index>();
  const auto cols = require(j, "cols").get<Eigen::Index>();
  const auto& data = require(j, "data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error(ErrorCode::ParseError, "matrix size mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows * cols; ++i) m(i / cols, i % cols) = data[static_cast<std::size_t>(i)].get<double>();
  return m;
}

Json params_to_json(const ClusterParams& p) {
  return Json{{"clusters", p.clusters},
              {"kmeans_restarts", p.kmeans_restarts},
              {"kmeans_max_iter", p.kmeans_max_iter},
              {"gmm_tolerance", p.gmm_tolerance},
              {"gmm_max_iter", p.gmm_max_iter},
              {"gmm_reg_covar", p.gmm_reg_covar},
              {"eps", p.eps},
              {"min_pts", p.min_pts},
              {"fuzzifier", p.fuzzifier},
              {"fcm_tolerance", p.fcm_tolerance},
              {"fcm_max_iter", p.fcm_max_iter}};
}

ClusterParams params_from_json(const Json& j) {
  ClusterParams p;
  p.clusters = j.value("clusters", p.clusters);
  p.kmeans_restarts = j.value("kmeans_restarts", p.kmeans_restarts);
  p.kmeans_max_iter = j.value("kmeans_max_iter", p.kmeans_max_iter);
  p.gmm_tolerance = j.value("gmm_tolerance", p.gmm_tolerance);
  p.gmm_max_iter = j.value("gmm_max_iter", p.gmm_max_iter);
  p.gmm_reg_covar = j.value("gmm_reg_covar", p.gmm_reg_covar);
  p.eps = j.value("eps", p.eps);
  p.min_pts = j.value("min_pts", p.min_pts);
  p.fuzzifier = j.value("fuzzifier", p.fuzzifier);
  p.fcm_tolerance = j.value("fcm_tolerance", p.fcm_tolerance);
  p.fcm_max_iter = j.value("fcm_max_iter", p.fcm_max_iter);
  return p;
}

Json model_to_json(const FittedClusterer& model) {
  Json j{{"format", "clex.model/1"},
         {"algorithm", std::string(to_string(model.algorithm()))},
         {"params", params_to_json(model.params())},
         {"num_features", model.num_features()},
         {"num_clusters", model.num_clusters()},
         {"converged", model.converged()},
         {"iterations", model.iterations()},
         {"train_labels", model.train_labels().labels()}};
  Json state = std::visit(
      overloaded{
          [](const KMeansState& s) { return Json{{"centers", matrix_to_json(s.centers)}}; },
          [](const GmmState& s) {
            Json covs = Json::array();
            for (const auto& c : s.covariances) covs.push_back(matrix_to_json(c));
            Json w = Json::array();
            for (Eigen::Index k = 0; k < s.weights.size(); ++k) w.push_back(s.weights[k]);
            return Json{{"weights", std::move(w)}, {"means", matrix_to_json(s.means)}, {"covariances", std::move(covs)}};
          },
          [](const DbscanState& s) {
            return Json{{"train", matrix_to_json(s.train)}, {"core_indices", s.core_indices}, {"core_labels", s.core_labels}};
          },
          [](const AgglomerativeState& s) {
            return Json{{"train", matrix_to_json(s.train)}, {"train_labels", s.train_labels}};
          },
          [](const FuzzyState& s) { return Json{{"centers", matrix_to_json(s.centers)}}; },
      },
      model.state());
  j["state"] = std::move(state);
  return j;
}

FittedClusterer model_from_json(const Json& j) {
  try {
    const auto algorithm = parse_algorithm(require(j, "algorithm").get<std::string>());
    const auto params = params_from_json(require(j, "params"));
    const auto features = require(j, "num_features").get<std::size_t>();
    const auto clusters = require(j, "num_clusters").get<int>();
    const auto& st = require(j, "state");
    ClustererState state;
    switch (algorithm) {
      case Algorithm::KMeans: state = KMeansState{matrix_from_json(require(st, "centers"))}; break;
      case Algorithm::FuzzyCMeans: state = FuzzyState{matrix_from_json(require(st, "centers"))}; break;
      case Algorithm::GMM: {
        GmmState g;
        const auto& w = require(st, "weights");
        g.weights.resize(static_cast<Eigen::Index>(w.size()));
        for (std::size_t k = 0; k < w.size(); ++k) g.weights[static_cast<Eigen::Index>(k)] = w[k].get<double>();
        g.means = matrix_from_json(require(st, "means"));
        g.log_det.resize(g.weights.size());
        for (const auto& c : require(st, "covariances")) {
          Matrix cov = matrix_from_json(c);
          Eigen::LLT<Matrix> llt(cov);
          if (llt.info() != Eigen::Success) throw Error(ErrorCode::ParseError, "stored covariance is not positive-definite");
          Matrix l = llt.matrixL();
          g.log_det[static_cast<Eigen::Index>(g.covariances.size())] = 2.0 * l.diagonal().array().log().sum();
          g.covariances.push_back(std::move(cov));
          g.cholesky.push_back(std::move(l));
        }
        if (g.covariances.size() != static_cast<std::size_t>(g.weights.size())) {
          throw Error(ErrorCode::ParseError, "GMM weight and covariance counts differ");
        }
        state = std::move(g);
        break;
      }
      case Algorithm::DBScan: {
        DbscanState s;
        s.train = matrix_from_json(require(st, "train"));
        s.core_indices = require(st, "core_indices").get<std::vector<std::size_t>>();
        s.core_labels = require(st, "core_labels").get<std::vector<int>>();
        s.core_points.resize(static_cast<Eigen::Index>(s.core_indices.size()), s.train.cols());
        for (std::size_t k = 0; k < s.core_indices.size(); ++k) {
          s.core_points.row(static_cast<Eigen::Index>(k)) = s.train.row(static_cast<Eigen::Index>(s.core_indices.at(k)));
        }
        state = std::move(s);
        break;
      }
      case Algorithm::Agglomerative:
        state = AgglomerativeState{matrix_from_json(require(st, "train")),
                                   require(st, "train_labels").get<std::vector<int>>()};
        break;
    }
    return FittedClusterer(algorithm, params, features, clusters, std::move(state),
                           ClusterAssignment(require(j, "train_labels").get<std::vector<int>>(), clusters),
                           j.value("converged", true), j.value("iterations", 0));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model document: ") + e.what());
  }
}

Json grouping_to_json(const FeatureGrouping& grouping) {
  Json labels = Json::array();
  for (std::size_t j = 0; j < grouping.num_groups(); ++j) labels.push_back(grouping.group_label(j));
  return Json{{"group_of", grouping.group_of()}, {"labels", std::move(labels)}};
}

Json silhouette_to_json(const SilhouetteReport& report) {
  Json cands = Json::array();
  for (const auto& c : report.candidates) {
    cands.push_back(Json{{"parameter", c.parameter}, {"score", finite_or_null(c.score)}, {"clusters_found", c.clusters_found}});
  }
  const char* status = report.status == SelectionStatus::Ok         ? "ok"
                       : report.status == SelectionStatus::AllNoise ? "all_noise"
                                                                    : "no_valid_candidate";
  return Json{{"candidates", std::move(cands)},
              {"selected", report.selected ? Json(*report.selected) : Json(nullptr)},
              {"status", status}};
}

Json g2pc_to_json(const G2PCResult& result) {
  return Json{{"method", "g2pc"},
              {"groups", result.pct_change.rows()},
              {"repeats", result.repeats},
              {"seed", result.seed.value},
              {"grouping", grouping_to_json(result.grouping)},
              {"pct_change", matrix_to_json(result.pct_change)},
              {"summary", summary_to_json(summarize(result))}};
}

Json l2pc_to_json(const L2PCResult& result) {
  return Json{{"method", "l2pc"},
              {"samples", result.samples},
              {"groups", result.num_groups},
              {"repeats", result.repeats},
              {"perturbations", result.perturbations},
              {"seed", result.seed.value},
              {"grouping", grouping_to_json(result.grouping)},
              {"layout", "sample,group,repeat (repeat fastest)"},
              {"pct_change", result.values},
              {"global", l2pc_global(result)},
              {"summary", summary_to_json(summarize(result))}};
}

Json pfi_to_json(const PFIResult& result, const FeatureGrouping& grouping) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index j = 0; j < result.importance.rows(); ++j) {
    rows.emplace_back(result.importance.row(j).begin(), result.importance.row(j).end());
  }
  return Json{{"method", "pfi"},
              {"baseline", result.baseline},
              {"grouping", grouping_to_json(grouping)},
              {"importance", matrix_to_json(result.importance)},
              {"summary", summary_to_json(rank_groups(grouping, rows))}};
}

Json effects_to_json(const EffectReport& report) {
  Json chosen = Json::array();
  for (const auto& c : report.chosen) {
    chosen.push_back(Json{{"lambda", c.lambda}, {"alpha", c.alpha}, {"validation_auc", c.validation_auc}});
  }
  return Json{{"method", "lr_enr"},
              {"positive_label", report.positive_label},
              {"grouping", grouping_to_json(report.grouping)},
              {"per_fold_auc", report.per_fold_auc},
              {"mean_auc", report.mean_auc()},
              {"per_fold_group_effect", matrix_to_json(report.per_fold_group_effect)},
              {"grand_mean_effect", report.grand_mean_effect},
              {"rank_by_magnitude", report.rank_by_magnitude()},
              {"hyperparameters", std::move(chosen)}};
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "group,label,mean,median,std,min,max\n";
  for (const auto& r : rows) {
    out += std::to_string(r.group) + "," + r.label + "," + io::format_double(r.stats.mean) + "," +
           io::format_double(r.stats.median) + "," + io::format_double(r.stats.std) + "," +
           io::format_double(r.stats.min) + "," + io::format_double(r.stats.max) + "\n";
  }
  return out;
}

std::string g2pc_tensor_csv(const G2PCResult& result) {
  std::string out = "group,label,repeat,value\n";
  for (Eigen::Index j = 0; j < result.pct_change.rows(); ++j) {
    const auto label = result.grouping.group_label(static_cast<std::size_t>(j));
    for (Eigen::Index k = 0; k < result.pct_change.cols(); ++k) {
      out += std::to_string(j) + "," + label + "," + std::to_string(k) + "," +
             io::format_double(result.pct_change(j, k)) + "\n";
    }
  }
  return out;
}

std::string l2pc_tensor_csv(const L2PCResult& result) {
  std::string out = "sample,group,label,repeat,value\n";
  for (std::size_t pos = 0; pos < result.samples.size(); ++pos) {
    for (std::size_t j = 0; j < result.num_groups; ++j) {
      const auto label = result.grouping.group_label(j);
      for (int k = 0; k < result.repeats; ++k) {
        out += std::to_string(result.samples[pos]) + "," + std::to_string(j) + "," + label + "," + std::to_string(k) +
               "," + io::format_double(result.at(pos, j, static_cast<std::size_t>(k))) + "\n";
      }
    }
  }
  return out;
}

std::string effects_summary_csv(const EffectReport& report) {
  std::vector<SummaryRow> rows;
  for (auto j : report.rank_by_magnitude()) {
    const auto col = report.per_fold_group_effect.col(static_cast<Eigen::Index>(j));
    auto stats = describe(std::vector<double>(col.begin(), col.end()));
    stats.mean = report.grand_mean_effect[j];
    rows.push_back({j, report.grouping.group_label(j), stats});
  }
  return summary_csv(rows);
}

}  // namespace clex
