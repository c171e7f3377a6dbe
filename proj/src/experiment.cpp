#include "clex/experiment.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "clex/baseline.hpp"
#include "clex/explain.hpp"
#include "clex/io.hpp"

namespace clex {
namespace fs = std::filesystem;

namespace {

// Walks a JSON object, recording which keys were read so leftovers can be
// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string where, std::vector<Diagnostic>& diags)
      : obj_(obj), where_(std::move(where)), diags_(diags) {
    if (!obj_.is_object()) diags_.push_back({where_, "expected an object"});
  }

  ~ObjectReader() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) diags_.push_back({where_ + "/" + key, "unknown key '" + key + "'"});
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.is_object() && obj_.contains(key);
  }

  const Json& at(const std::string& key) { return obj_.at(key); }
  std::string path(const std::string& key) const { return where_ + "/" + key; }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      diags_.push_back({path(key), "has the wrong type"});
      return fallback;
    }
  }

  int get_int(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) {
      diags_.push_back({path(key), "must be an integer"});
      return fallback;
    }
    return v.get<int>();
  }

 private:
  const Json& obj_;
  std::string where_;
  std::vector<Diagnostic>& diags_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty()) return p;
  return fs::weakly_canonical(p.is_absolute() ? p : base / p);
}

// Sample count implied by the data section, when it can be determined cheaply.
std::optional<std::size_t> sample_count(const ExperimentConfig& c) {
  try {
    switch (c.source) {
      case DataSource::Synthetic:
        return static_cast<std::size_t>(c.samples_per_cluster) * (c.dataset == SyntheticId::One ? 2u : 4u);
      case DataSource::Csv:
        return io::read_matrix_csv(c.data_path).rows();
      case DataSource::Panel: {
        std::size_t n = 0;
        for (const auto& e : fs::directory_iterator(c.data_path)) {
          if (e.is_regular_file() && e.path().extension() == ".csv") ++n;
        }
        return n;
      }
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

struct Loaded {
  DataMatrix data;
  std::optional<std::vector<int>> truth;
  FeatureGrouping grouping;
};

class Timer {
 public:
  explicit Timer(Json& sink, std::string key) : sink_(sink), key_(std::move(key)), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    sink_[key_] = sink_.value(key_, 0.0) + dt;
  }

 private:
  Json& sink_;
  std::string key_;
  std::chrono::steady_clock::time_point start_;
};

const char* source_name(DataSource s) {
  switch (s) {
    case DataSource::Synthetic: return "synthetic";
    case DataSource::Csv: return "csv";
    case DataSource::Panel: return "panel";
  }
  return "?";
}

}  // namespace

Json ExperimentConfig::to_json() const {
  Json data{{"source", source_name(source)}};
  if (source == DataSource::Synthetic) {
    data["dataset"] = dataset == SyntheticId::One ? "one" : "two";
    data["samples_per_cluster"] = samples_per_cluster;
    data["replicates"] = replicates;
  } else {
    data["path"] = data_path.string();
    if (!labels_path.empty()) data["labels"] = labels_path.string();
    if (source == DataSource::Panel) data["domains"] = domains_path.string();
  }

  Json clustering = params_to_json(params);
  clustering["algorithm"] = std::string(to_string(algorithm));
  if (select_eps_auto) {
    clustering["select"] = "auto";
  } else if (!select.empty()) {
    clustering["select"] = select;
  }

  Json grouping_json;
  switch (grouping) {
    case GroupingSource::Identity: grouping_json = "identity"; break;
    case GroupingSource::DomainPairs: grouping_json = "domain_pairs"; break;
    case GroupingSource::File: grouping_json = Json{{"file", grouping_path.string()}}; break;
  }

  Json explainers = Json::object();
  if (run_g2pc) explainers["g2pc"] = Json{{"repeats", g2pc_repeats}};
  if (run_l2pc) {
    explainers["l2pc"] = Json{{"repeats", l2pc_repeats}, {"perturbations", l2pc_perturbations}};
    if (!l2pc_samples.empty()) explainers["l2pc"]["samples"] = l2pc_samples;
  }
  if (run_pfi) explainers["pfi"] = Json{{"repeats", pfi_repeats}};
  if (run_baseline) explainers["baseline"] = Json{{"outer_folds", baseline_outer}, {"inner_folds", baseline_inner}};

  return Json{{"seed", seed.value},         {"workers", workers},
              {"output_dir", output_dir.string()}, {"data", std::move(data)},
              {"zscore", zscore},           {"clustering", std::move(clustering)},
              {"grouping", std::move(grouping_json)}, {"explainers", std::move(explainers)}};
}

ParsedConfig parse_config(const Json& document, const fs::path& base_dir) {
  ParsedConfig out;
  auto& diags = out.diagnostics;
  ExperimentConfig c;
  {
    ObjectReader root(document, "", diags);
    if (!document.is_object()) return out;

    if (root.has("seed")) {
      const auto& s = root.at("seed");
      if (s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0)) {
        c.seed.value = s.get<std::uint64_t>();
      } else {
        diags.push_back({"/seed", "must be a non-negative integer"});
      }
    }
    const int workers = root.get_int("workers", 1);
    if (workers < 1) diags.push_back({"/workers", "must be >= 1"});
    c.workers = static_cast<unsigned>(std::max(workers, 1));
    c.output_dir = resolve(root.get<std::string>("output_dir", "clex-out"), base_dir);

    // data
    bool zscore_default = true;
    if (!root.has("data")) {
      diags.push_back({"/data", "is required"});
    } else {
      ObjectReader data(root.at("data"), "/data", diags);
      const auto source = data.get<std::string>("source", "");
      if (source == "synthetic") {
        c.source = DataSource::Synthetic;
        const auto ds = data.get<std::string>("dataset", "one");
        if (ds == "one") {
          c.dataset = SyntheticId::One;
        } else if (ds == "two") {
          c.dataset = SyntheticId::Two;
        } else {
          diags.push_back({"/data/dataset", "must be 'one' or 'two'"});
        }
        c.samples_per_cluster = data.get_int("samples_per_cluster", 50);
        if (c.samples_per_cluster < 1) diags.push_back({"/data/samples_per_cluster", "must be >= 1"});
        c.replicates = data.get_int("replicates", 1);
        if (c.replicates < 1) diags.push_back({"/data/replicates", "must be >= 1"});
      } else if (source == "csv" || source == "panel") {
        c.source = source == "csv" ? DataSource::Csv : DataSource::Panel;
        zscore_default = false;
        if (!data.has("path")) {
          diags.push_back({"/data/path", "is required for source '" + source + "'"});
        } else {
          c.data_path = resolve(data.get<std::string>("path", ""), base_dir);
          if (!fs::exists(c.data_path)) diags.push_back({"/data/path", "does not exist: " + c.data_path.string()});
        }
        if (data.has("labels")) {
          c.labels_path = resolve(data.get<std::string>("labels", ""), base_dir);
          if (!fs::exists(c.labels_path)) diags.push_back({"/data/labels", "does not exist: " + c.labels_path.string()});
        }
        if (c.source == DataSource::Panel) {
          c.domains_path = data.has("domains") ? resolve(data.get<std::string>("domains", ""), base_dir)
                                               : c.data_path / "domains.json";
          if (!fs::exists(c.domains_path)) diags.push_back({"/data/domains", "does not exist: " + c.domains_path.string()});
        }
      } else {
        diags.push_back({"/data/source", "must be one of synthetic, csv, panel"});
      }
    }
    c.zscore = root.get<bool>("zscore", zscore_default);

    // clustering
    if (!root.has("clustering")) {
      diags.push_back({"/clustering", "is required"});
    } else {
      ObjectReader cl(root.at("clustering"), "/clustering", diags);
      const auto tag = cl.get<std::string>("algorithm", "");
      try {
        c.algorithm = parse_algorithm(tag);
      } catch (const Error& e) {
        diags.push_back({"/clustering/algorithm", e.what()});
      }
      c.params.clusters = cl.get_int("clusters", c.params.clusters);
      c.params.kmeans_restarts = cl.get_int("kmeans_restarts", c.params.kmeans_restarts);
      c.params.kmeans_max_iter = cl.get_int("kmeans_max_iter", c.params.kmeans_max_iter);
      c.params.gmm_tolerance = cl.get<double>("gmm_tolerance", c.params.gmm_tolerance);
      c.params.gmm_max_iter = cl.get_int("gmm_max_iter", c.params.gmm_max_iter);
      c.params.gmm_reg_covar = cl.get<double>("gmm_reg_covar", c.params.gmm_reg_covar);
      c.params.eps = cl.get<double>("eps", c.params.eps);
      c.params.min_pts = cl.get_int("min_pts", c.params.min_pts);
      c.params.fuzzifier = cl.get<double>("fuzzifier", c.params.fuzzifier);
      c.params.fcm_tolerance = cl.get<double>("fcm_tolerance", c.params.fcm_tolerance);
      c.params.fcm_max_iter = cl.get_int("fcm_max_iter", c.params.fcm_max_iter);
      if (cl.has("select")) {
        const auto& sel = cl.at("select");
        if (sel.is_string() && sel.get<std::string>() == "auto" && c.algorithm == Algorithm::DBScan) {
          c.select_eps_auto = true;
        } else if (sel.is_array() && !sel.empty() && std::all_of(sel.begin(), sel.end(), [](const Json& v) { return v.is_number(); })) {
          for (const auto& v : sel) c.select.push_back(v.get<double>());
        } else {
          diags.push_back({"/clustering/select", "must be a non-empty list of numbers (or \"auto\" for dbscan)"});
        }
      }
      if (uses_cluster_count(c.algorithm)) {
        for (double v : c.select) {
          if (v < 2 || v != std::floor(v)) diags.push_back({"/clustering/select", "cluster counts must be integers >= 2"});
        }
        if (c.select.empty() && c.params.clusters < 2) diags.push_back({"/clustering/clusters", "must be >= 2"});
      } else {
        for (double v : c.select) {
          if (!(v > 0)) diags.push_back({"/clustering/select", "eps candidates must be > 0"});
        }
        if (!(c.params.eps > 0)) diags.push_back({"/clustering/eps", "must be > 0"});
        if (c.params.min_pts < 1) diags.push_back({"/clustering/min_pts", "must be >= 1"});
      }
      if (!(c.params.fuzzifier > 1.0)) diags.push_back({"/clustering/fuzzifier", "must be > 1"});
    }

    // grouping
    if (root.has("grouping")) {
      const auto& g = root.at("grouping");
      if (g.is_string() && g.get<std::string>() == "identity") {
        c.grouping = GroupingSource::Identity;
      } else if (g.is_string() && g.get<std::string>() == "domain_pairs") {
        c.grouping = GroupingSource::DomainPairs;
        if (c.source != DataSource::Panel) diags.push_back({"/grouping", "domain_pairs requires a panel data source"});
      } else if (g.is_object()) {
        ObjectReader gr(g, "/grouping", diags);
        c.grouping = GroupingSource::File;
        c.grouping_path = resolve(gr.get<std::string>("file", ""), base_dir);
        if (c.grouping_path.empty() || !fs::exists(c.grouping_path)) {
          diags.push_back({"/grouping/file", "does not exist: " + c.grouping_path.string()});
        }
      } else {
        diags.push_back({"/grouping", "must be \"identity\", \"domain_pairs\" or {\"file\": path}"});
      }
    }

    // explainers
    if (root.has("explainers")) {
      ObjectReader ex(root.at("explainers"), "/explainers", diags);
      if (ex.has("g2pc")) {
        ObjectReader g(ex.at("g2pc"), "/explainers/g2pc", diags);
        c.run_g2pc = true;
        c.g2pc_repeats = g.get_int("repeats", 100);
        if (c.g2pc_repeats < 1) diags.push_back({"/explainers/g2pc/repeats", "K must be >= 1"});
      }
      if (ex.has("l2pc")) {
        ObjectReader l(ex.at("l2pc"), "/explainers/l2pc", diags);
        c.run_l2pc = true;
        c.l2pc_repeats = l.get_int("repeats", 100);
        c.l2pc_perturbations = l.get_int("perturbations", 30);
        c.l2pc_samples = l.get<std::vector<std::size_t>>("samples", {});
        if (c.l2pc_repeats < 1) diags.push_back({"/explainers/l2pc/repeats", "K must be >= 1"});
        if (c.l2pc_perturbations < 1) diags.push_back({"/explainers/l2pc/perturbations", "M must be >= 1"});
      }
      if (ex.has("pfi")) {
        ObjectReader p(ex.at("pfi"), "/explainers/pfi", diags);
        c.run_pfi = true;
        c.pfi_repeats = p.get_int("repeats", 100);
        if (c.pfi_repeats < 1) diags.push_back({"/explainers/pfi/repeats", "K must be >= 1"});
        if (c.source == DataSource::Panel || (c.source == DataSource::Csv && c.labels_path.empty())) {
          diags.push_back({"/explainers/pfi", "pfi needs ground-truth labels (synthetic data or data.labels)"});
        }
      }
      if (ex.has("baseline")) {
        ObjectReader b(ex.at("baseline"), "/explainers/baseline", diags);
        c.run_baseline = true;
        c.baseline_outer = b.get_int("outer_folds", 10);
        c.baseline_inner = b.get_int("inner_folds", 10);
        if (c.baseline_outer < 1 || c.baseline_inner < 1) diags.push_back({"/explainers/baseline", "fold counts must be >= 1"});
      }
    }
  }

  if (c.run_l2pc) {
    if (auto n = sample_count(c)) {
      if (c.l2pc_perturbations >= 1 && static_cast<std::size_t>(c.l2pc_perturbations) > *n - 1) {
        diags.push_back({"/explainers/l2pc/perturbations", "M must be <= N-1 (M=" + std::to_string(c.l2pc_perturbations) +
                                                               ", N=" + std::to_string(*n) + ")"});
      }
      for (auto s : c.l2pc_samples) {
        if (s >= *n) diags.push_back({"/explainers/l2pc/samples", "sample index " + std::to_string(s) + " >= N"});
      }
    }
  }

  if (diags.empty()) out.config = std::move(c);
  return out;
}

ParsedConfig load_config(const fs::path& path) {
  const auto text = io::read_text(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    ParsedConfig out;
    out.diagnostics.push_back({"", std::string("not valid JSON: ") + e.what()});
    return out;
  }
  // A manifest carries the resolved config under "config".
  if (doc.is_object() && doc.contains("config") && doc.contains("tool")) doc = doc["config"];
  return parse_config(doc, fs::absolute(path).parent_path());
}

std::vector<Diagnostic> validate(const fs::path& config_path) { return load_config(config_path).diagnostics; }

std::vector<int> match_clusters_to_truth(const ClusterAssignment& clusters, const std::vector<int>& truth) {
  std::vector<std::map<int, int>> votes(static_cast<std::size_t>(clusters.num_clusters()));
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] != ClusterAssignment::kNoise) ++votes[static_cast<std::size_t>(clusters[i])][truth.at(i)];
  }
  std::vector<int> mapping(votes.size(), ClusterAssignment::kNoise);
  for (std::size_t c = 0; c < votes.size(); ++c) {
    int best = -1;
    for (const auto& [label, count] : votes[c]) {
      if (count > best) {
        best = count;
        mapping[c] = label;
      }
    }
  }
  return mapping;
}

namespace {

struct ReplicateOutput {
  std::optional<G2PCResult> g2pc;
  std::optional<L2PCResult> l2pc;
};

Loaded load_data(const ExperimentConfig& c, int replicate) {
  Loaded out;
  switch (c.source) {
    case DataSource::Synthetic: {
      const auto spec = c.dataset == SyntheticId::One ? SyntheticSpec::dataset_one(c.samples_per_cluster)
                                                      : SyntheticSpec::dataset_two(c.samples_per_cluster);
      auto batch_seed = derive(c.seed, {stream_tag("datagen.batch"), static_cast<std::uint64_t>(replicate)});
      auto gen = generate(spec, batch_seed);
      out.data = std::move(gen.data);
      out.truth = gen.truth.labels();
      break;
    }
    case DataSource::Csv:
      out.data = io::read_matrix_csv(c.data_path);
      if (!c.labels_path.empty()) {
        out.truth = io::read_labels_csv(c.labels_path);
        if (out.truth->size() != out.data.rows()) {
          throw Error(ErrorCode::DimensionMismatch, "labels file length does not match data rows");
        }
      }
      break;
    case DataSource::Panel: {
      auto panel = io::read_panel(c.data_path, c.domains_path);
      auto fnc = connectivity_features(panel);
      out.data = std::move(fnc.data);
      out.grouping = std::move(fnc.grouping);
      if (!c.labels_path.empty()) out.truth = io::read_labels_csv(c.labels_path);
      break;
    }
  }
  if (c.zscore) out.data = zscore(out.data);
  switch (c.grouping) {
    case GroupingSource::Identity: out.grouping = identity_grouping(out.data.cols()); break;
    case GroupingSource::File: out.grouping = io::read_grouping(c.grouping_path, out.data); break;
    case GroupingSource::DomainPairs: break;  // set by the panel loader
  }
  return out;
}

std::string plot_row(const std::string& explainer, const std::string& group, const std::string& sample,
                     const std::string& repeat, double value, const std::string& truth, const std::string& cluster,
                     const std::string& correct) {
  return explainer + "," + group + "," + sample + "," + repeat + "," + io::format_double(value) + "," + truth + "," +
         cluster + "," + correct + "\n";
}

class Pipeline {
 public:
  explicit Pipeline(const ExperimentConfig& c) : c_(c) {}

  RunOutcome run() {
    RunOutcome outcome;
    Json timings = Json::object();
    const auto started = std::chrono::steady_clock::now();
    std::vector<ReplicateOutput> results;
    try {
      fs::create_directories(c_.output_dir);
      const int reps = c_.source == DataSource::Synthetic ? c_.replicates : 1;
      for (int r = 0; r < reps; ++r) {
        const fs::path dir = reps == 1 ? c_.output_dir : c_.output_dir / ("replicate_" + pad(r));
        results.push_back(run_replicate(r, dir, timings));
      }
      if (reps > 1) write_pooled(results);
    } catch (const Error& e) {
      outcome.exit_code = 3;
      outcome.error = Json{{"stage", stage_}, {"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    } catch (const std::exception& e) {
      outcome.exit_code = 3;
      outcome.error = Json{{"stage", stage_}, {"error", "RuntimeError"}, {"message", e.what()}};
    }
    if (outcome.error) {
      try {
        write(c_.output_dir / "error.json", outcome.error->dump(2) + "\n");
      } catch (const std::exception&) {
      }
    }
    timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    Json manifest{{"tool", "clex"},
                  {"version", kVersion},
                  {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                  {"seed", c_.seed.value},
                  {"workers", c_.workers},
                  {"config", c_.to_json()},
                  {"status", outcome.exit_code == 0 ? "ok" : "failed"},
                  {"timings", timings}};
    Json files = Json::array();
    for (const auto& f : files_) files.push_back(fs::relative(f, c_.output_dir).generic_string());
    manifest["outputs"] = std::move(files);
    try {
      write(c_.output_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    outcome.files = files_;
    return outcome;
  }

 private:
  static std::string pad(int r) {
    std::string s = std::to_string(r);
    return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
  }

  void write(const fs::path& path, const std::string& text) {
    io::write_text(path, text);
    if (path.filename() != "manifest.json" && path.filename() != "error.json") files_.push_back(path);
  }

  ReplicateOutput run_replicate(int r, const fs::path& dir, Json& timings) {
    const auto rep = static_cast<std::uint64_t>(r);
    ReplicateOutput out;

    stage_ = "data";
    Loaded loaded = [&] {
      Timer t(timings, "data_seconds");
      return load_data(c_, r);
    }();
    const auto& data = loaded.data;
    io::write_matrix_csv(dir / "data.csv", data);
    files_.push_back(dir / "data.csv");

    stage_ = "clustering";
    Json clustering_doc = Json::object();
    ClusterParams params = c_.params;
    {
      Timer t(timings, "clustering_seconds");
      if (c_.select_eps_auto || !c_.select.empty()) {
        auto candidates = c_.select_eps_auto ? dbscan_eps_grid(data, params.min_pts) : c_.select;
        auto report = select_clusters(c_.algorithm, data, candidates, params,
                                      derive(c_.seed, {stream_tag("select"), rep}));
        clustering_doc["selection"] = silhouette_to_json(report);
        if (!report.selected) {
          write(dir / "clustering.json", clustering_doc.dump(2) + "\n");
          throw Error(report.status == SelectionStatus::AllNoise ? ErrorCode::AllNoiseModel
                                                                 : ErrorCode::InsufficientClusters,
                      "no candidate produced at least two clusters");
        }
        if (uses_cluster_count(c_.algorithm)) {
          params.clusters = static_cast<int>(*report.selected);
        } else {
          params.eps = *report.selected;
        }
      }
    }
    const auto model = [&] {
      Timer t(timings, "clustering_seconds");
      return fit(c_.algorithm, data, params, derive(c_.seed, {stream_tag("fit"), rep}));
    }();
    const auto labels = assign(model, data);
    clustering_doc["model"] = model_to_json(model);
    clustering_doc["warnings"] = model.warnings();
    if (!model.all_noise() && model.num_clusters() >= 2) {
      try {
        clustering_doc["silhouette"] = silhouette_score(data, labels);
      } catch (const Error&) {
        clustering_doc["silhouette"] = nullptr;
      }
    }
    write(dir / "clustering.json", clustering_doc.dump(2) + "\n");

    std::vector<int> mapping;
    if (loaded.truth) mapping = match_clusters_to_truth(labels, *loaded.truth);
    {
      std::string text = loaded.truth ? "sample,cluster,true_label,correct\n" : "sample,cluster\n";
      for (std::size_t i = 0; i < labels.size(); ++i) {
        text += std::to_string(i) + "," + std::to_string(labels[i]);
        if (loaded.truth) {
          const bool correct = labels[i] != ClusterAssignment::kNoise &&
                               mapping[static_cast<std::size_t>(labels[i])] == (*loaded.truth)[i];
          text += "," + std::to_string((*loaded.truth)[i]) + "," + (correct ? "1" : "0");
        }
        text += "\n";
      }
      write(dir / "labels.csv", text);
    }
    if (model.all_noise() && (c_.run_g2pc || c_.run_l2pc || c_.run_pfi)) {
      stage_ = "explain";
      throw Error(ErrorCode::AllNoiseModel, "clustering produced only noise; refusing to explain");
    }

    std::string plot = "explainer,group,sample,repeat,value,true_label,cluster_label,correct\n";
    const auto& grouping = loaded.grouping;

    if (c_.run_g2pc) {
      stage_ = "g2pc";
      Timer t(timings, "g2pc_seconds");
      out.g2pc = g2pc(model, data, grouping, derive(c_.seed, {stream_tag("g2pc.run"), rep}),
                      {c_.g2pc_repeats, c_.workers});
      write(dir / "g2pc.json", g2pc_to_json(*out.g2pc).dump(2) + "\n");
      write(dir / "g2pc_summary.csv", summary_csv(summarize(*out.g2pc)));
      write(dir / "g2pc_tensor.csv", g2pc_tensor_csv(*out.g2pc));
      for (Eigen::Index j = 0; j < out.g2pc->pct_change.rows(); ++j) {
        for (Eigen::Index k = 0; k < out.g2pc->pct_change.cols(); ++k) {
          plot += plot_row("g2pc", grouping.group_label(static_cast<std::size_t>(j)), "", std::to_string(k),
                           out.g2pc->pct_change(j, k), "", "", "");
        }
      }
    }

    if (c_.run_l2pc) {
      stage_ = "l2pc";
      Timer t(timings, "l2pc_seconds");
      std::optional<std::vector<std::size_t>> subset;
      if (!c_.l2pc_samples.empty()) subset = c_.l2pc_samples;
      out.l2pc = l2pc(model, data, grouping, derive(c_.seed, {stream_tag("l2pc.run"), rep}), c_.l2pc_perturbations,
                      {c_.l2pc_repeats, c_.workers}, subset);
      write(dir / "l2pc.json", l2pc_to_json(*out.l2pc).dump(2) + "\n");
      write(dir / "l2pc_summary.csv", summary_csv(summarize(*out.l2pc)));
      write(dir / "l2pc_tensor.csv", l2pc_tensor_csv(*out.l2pc));
      const auto& res = *out.l2pc;
      for (std::size_t pos = 0; pos < res.samples.size(); ++pos) {
        const auto n = res.samples[pos];
        const auto cl = labels[n];
        std::string truth, correct;
        if (loaded.truth) {
          truth = std::to_string((*loaded.truth)[n]);
          correct = (cl != ClusterAssignment::kNoise && mapping[static_cast<std::size_t>(cl)] == (*loaded.truth)[n]) ? "1" : "0";
        }
        for (std::size_t j = 0; j < res.num_groups; ++j) {
          for (int k = 0; k < res.repeats; ++k) {
            plot += plot_row("l2pc", grouping.group_label(j), std::to_string(n), std::to_string(k),
                             res.at(pos, j, static_cast<std::size_t>(k)), truth, std::to_string(cl), correct);
          }
        }
      }
    }

    if (c_.run_pfi) {
      stage_ = "pfi";
      Timer t(timings, "pfi_seconds");
      if (!loaded.truth) throw Error(ErrorCode::InvalidArgument, "pfi needs ground-truth labels");
      const auto map_labels = mapping;
      Predictor predictor = [&model, map_labels](const Matrix& x) {
        auto a = assign(model, x);
        std::vector<int> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          out[i] = a[i] == ClusterAssignment::kNoise ? ClusterAssignment::kNoise : map_labels[static_cast<std::size_t>(a[i])];
        }
        return out;
      };
      auto pfi = permutation_feature_importance(predictor, data, *loaded.truth, grouping, accuracy,
                                                derive(c_.seed, {stream_tag("pfi.run"), rep}),
                                                {c_.pfi_repeats, c_.workers});
      write(dir / "pfi.json", pfi_to_json(pfi, grouping).dump(2) + "\n");
      std::vector<std::vector<double>> rows;
      for (Eigen::Index j = 0; j < pfi.importance.rows(); ++j) {
        rows.emplace_back(pfi.importance.row(j).begin(), pfi.importance.row(j).end());
        for (Eigen::Index k = 0; k < pfi.importance.cols(); ++k) {
          plot += plot_row("pfi", grouping.group_label(static_cast<std::size_t>(j)), "", std::to_string(k),
                           pfi.importance(j, k), "", "", "");
        }
      }
      write(dir / "pfi_summary.csv", summary_csv(rank_groups(grouping, rows)));
    }

    if (c_.run_baseline) {
      stage_ = "baseline";
      Timer t(timings, "baseline_seconds");
      NestedCvOptions opts;
      opts.outer_folds = c_.baseline_outer;
      opts.inner_folds = c_.baseline_inner;
      opts.workers = c_.workers;
      auto report = nested_cv_effects(data, labels.labels(), grouping, derive(c_.seed, {stream_tag("baseline.run"), rep}), opts);
      write(dir / "baseline.json", effects_to_json(report).dump(2) + "\n");
      write(dir / "baseline_summary.csv", effects_summary_csv(report));
      for (Eigen::Index f = 0; f < report.per_fold_group_effect.rows(); ++f) {
        for (Eigen::Index j = 0; j < report.per_fold_group_effect.cols(); ++j) {
          plot += plot_row("baseline", grouping.group_label(static_cast<std::size_t>(j)), "", std::to_string(f),
                           report.per_fold_group_effect(f, j), "", "", "");
        }
      }
    }

    write(dir / "plot_long.csv", plot);
    return out;
  }

  void write_pooled(const std::vector<ReplicateOutput>& results) {
    stage_ = "pooling";
    const auto& first = results.front();
    if (first.g2pc) {
      std::vector<std::vector<double>> pooled(first.g2pc->grouping.num_groups());
      for (const auto& r : results) {
        for (Eigen::Index j = 0; j < r.g2pc->pct_change.rows(); ++j) {
          auto& dst = pooled[static_cast<std::size_t>(j)];
          dst.insert(dst.end(), r.g2pc->pct_change.row(j).begin(), r.g2pc->pct_change.row(j).end());
        }
      }
      write(c_.output_dir / "g2pc_pooled_summary.csv", summary_csv(rank_groups(first.g2pc->grouping, pooled)));
    }
    if (first.l2pc) {
      std::vector<std::vector<double>> pooled(first.l2pc->num_groups);
      for (const auto& r : results) {
        for (std::size_t pos = 0; pos < r.l2pc->samples.size(); ++pos) {
          for (std::size_t j = 0; j < r.l2pc->num_groups; ++j) {
            for (int k = 0; k < r.l2pc->repeats; ++k) pooled[j].push_back(r.l2pc->at(pos, j, static_cast<std::size_t>(k)));
          }
        }
      }
      write(c_.output_dir / "l2pc_pooled_summary.csv", summary_csv(rank_groups(first.l2pc->grouping, pooled)));
    }
  }

  const ExperimentConfig& c_;
  std::string stage_ = "setup";
  std::vector<fs::path> files_;
};

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config) { return Pipeline(config).run(); }

}  // namespace clex
