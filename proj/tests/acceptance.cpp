// Acceptance run: one [PASS]/[FAIL] line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "clex/baseline.hpp"
#include "clex/datagen.hpp"
#include "clex/experiment.hpp"
#include "clex/explain.hpp"
#include "clex/io.hpp"
#include "clex/parallel.hpp"
#include "property_checks.hpp"

using namespace clex;
namespace fs = std::filesystem;

namespace {

constexpr RandomSeed kRoot{1};
constexpr int kReplicates = 100;
constexpr int kRepeats = 100;

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

RandomSeed seed_for(const char* criterion) { return derive(kRoot, {stream_tag(criterion)}); }

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void report(const std::string& id, bool pass, const std::string& title, const std::string& detail) {
  std::printf("[%s] %s %s\n", pass ? "PASS" : "FAIL", id.c_str(), title.c_str());
  std::istringstream lines(detail);
  std::string line;
  while (std::getline(lines, line)) std::printf("       %s\n", line.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string join(const std::vector<double>& xs, int digits = 4) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + fmt(xs[i], digits);
  return s;
}

double mean_of(const std::vector<double>& v) { return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation of average ranks; NaN when either side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ra = average_ranks(a), rb = average_ranks(b);
  const double ma = mean_of(ra), mb = mean_of(rb);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

ClusterParams with_clusters(int c) {
  ClusterParams p;
  p.clusters = c;
  return p;
}

// DBScan with eps picked by silhouette over the percentile grid (min_pts 4).
std::optional<FittedClusterer> dbscan_by_silhouette(const DataMatrix& data, RandomSeed seed) {
  ClusterParams p;
  p.min_pts = 4;
  auto report = select_clusters(Algorithm::DBScan, data, dbscan_eps_grid(data, p.min_pts), p, seed);
  if (!report.selected) return std::nullopt;
  p.eps = *report.selected;
  return fit(Algorithm::DBScan, data, p, seed);
}

// ---------------------------------------------------------------------------

struct PooledG2pc {
  std::map<Algorithm, std::vector<std::vector<double>>> values;  // algorithm -> feature -> pooled values
  int dbscan_skipped = 0;
  double seconds = 0;
};

PooledG2pc dataset_one_g2pc() {
  Clock clock;
  const auto seed = seed_for("ac1");
  auto batch = generate_batch(SyntheticSpec::dataset_one(), kReplicates, seed);
  const auto& algs = props::all_algorithms();
  // replicate x algorithm -> J x K matrix (empty when DBScan found nothing)
  std::vector<std::vector<Matrix>> results(batch.size(), std::vector<Matrix>(algs.size()));
  parallel_for(batch.size(), workers(), [&](std::size_t r) {
    auto data = zscore(batch[r].data);
    const auto rep_seed = derive(seed, {r});
    for (std::size_t a = 0; a < algs.size(); ++a) {
      std::optional<FittedClusterer> model;
      if (algs[a] == Algorithm::DBScan) {
        model = dbscan_by_silhouette(data, rep_seed);
        if (model && model->all_noise()) model.reset();
      } else {
        model = fit(algs[a], data, with_clusters(2), rep_seed);
      }
      if (!model) continue;
      results[r][a] = g2pc(*model, data, identity_grouping(5), derive(rep_seed, {a}), {kRepeats, 1}).pct_change;
    }
  });
  PooledG2pc out;
  for (std::size_t a = 0; a < algs.size(); ++a) {
    auto& pooled = out.values[algs[a]];
    pooled.assign(5, {});
    for (const auto& rep : results) {
      if (rep[a].size() == 0) {
        ++out.dbscan_skipped;
        continue;
      }
      for (Eigen::Index j = 0; j < 5; ++j) pooled[static_cast<std::size_t>(j)].insert(pooled[static_cast<std::size_t>(j)].end(), rep[a].row(j).begin(), rep[a].row(j).end());
    }
  }
  out.seconds = clock.seconds();
  return out;
}

void ac1(const PooledG2pc& pooled) {
  bool pass = true;
  std::string detail;
  for (auto alg : {Algorithm::KMeans, Algorithm::Agglomerative, Algorithm::FuzzyCMeans}) {
    std::vector<double> med, avg;
    for (const auto& v : pooled.values.at(alg)) {
      med.push_back(median(v));
      avg.push_back(mean_of(v));
    }
    const bool order = med[0] > med[1] && med[1] > med[2];
    const bool small = med[3] < 0.01 && med[4] < 0.01;
    bool ok = order && small;
    std::string extra;
    if (alg == Algorithm::KMeans) {
      const bool range = med[0] >= 0.01 && med[0] <= 0.10;
      ok = ok && range;
      extra = range ? "" : " (feature-1 median outside [0.01, 0.10])";
    }
    pass = pass && ok;
    detail += std::string(to_string(alg)) + ": pooled medians f1..f5 = " + join(med) + (order ? "" : " (f1>f2>f3 violated)") +
              (small ? "" : " (f4/f5 not < 0.01)") + extra + "; means = " + join(avg) + "\n";
  }
  const bool fast = pooled.seconds < 300;
  pass = pass && fast;
  detail += "100 replicates x 5 algorithms x K=100 in " + fmt(pooled.seconds, 1) + " s on " + std::to_string(workers()) +
            " worker(s)" + (fast ? "" : " (over the 5 min target)");
  report("AC1", pass, "Dataset One importance ordering (pooled G2PC medians)", detail);
}

void ac2(const PooledG2pc& pooled) {
  const double km = mean_of(pooled.values.at(Algorithm::KMeans)[0]);
  const double gmm = mean_of(pooled.values.at(Algorithm::GMM)[0]);
  const double db = mean_of(pooled.values.at(Algorithm::DBScan)[0]);
  const bool pass = gmm >= 2 * km && db >= 2 * km && km > 0;
  report("AC2", pass, "GMM/DBScan sensitivity gap (feature-1 pooled mean >= 2x KMeans)",
         "feature-1 pooled means: kmeans " + fmt(km) + ", gmm " + fmt(gmm) + " (" + fmt(gmm / km, 1) + "x), dbscan " +
             fmt(db) + " (" + fmt(db / km, 1) + "x); dbscan replicates without clusters: " +
             std::to_string(pooled.dbscan_skipped));
}

void ac3() {
  const auto seed = seed_for("ac3");
  auto data = zscore(generate(SyntheticSpec::dataset_one(), seed).data);
  bool pass = true;
  std::string detail;
  for (auto alg : {Algorithm::KMeans, Algorithm::FuzzyCMeans}) {
    auto model = fit(alg, data, with_clusters(2), seed);
    auto g = g2pc(model, data, identity_grouping(5), derive(seed, {1}), {kRepeats, workers()});
    auto l = l2pc(model, data, identity_grouping(5), derive(seed, {2}), 30, {kRepeats, workers()});
    std::vector<double> med;
    for (const auto& s : g.group_stats()) med.push_back(s.median);
    const auto global = l2pc_global(l);
    const double rho = spearman(global, med);
    const bool ok = rho >= 0.8;
    pass = pass && ok;
    detail += std::string(to_string(alg)) + ": spearman " + fmt(rho, 3) + "; L2PC global " + join(global) +
              "; G2PC medians " + join(med) + "\n";
  }
  report("AC3", pass, "L2PC/G2PC agreement (Spearman >= 0.8)", detail);
}

void ac4() {
  const auto seed = seed_for("ac4");
  auto data = zscore(generate(SyntheticSpec::dataset_two(), seed).data);
  bool pass = true;
  std::string detail;
  for (auto alg : {Algorithm::KMeans, Algorithm::FuzzyCMeans}) {
    auto model = fit(alg, data, with_clusters(4), seed);
    auto g = g2pc(model, data, identity_grouping(5), derive(seed, {1}), {kRepeats, workers()});
    std::vector<double> means;
    for (const auto& s : g.group_stats()) means.push_back(s.mean);
    const double low = std::min({means[0], means[1], means[2]});
    const double high = std::max(means[3], means[4]);
    pass = pass && low > high;
    detail += std::string(to_string(alg)) + ": G2PC means f1..f5 = " + join(means) + "; min(f1..f3) " + fmt(low) +
              " vs max(f4,f5) " + fmt(high) + "\n";
  }
  report("AC4", pass, "Dataset Two variance-aware ranking", detail);
}

void ac5() {
  Clock clock;
  const auto seed = seed_for("ac5");
  std::string detail;
  bool pass = true;

  Matrix four(4, 1);
  four << 0, 0, 10, 10;
  DataMatrix d4(four);
  auto m4 = fit(Algorithm::KMeans, d4, with_clusters(2), seed);
  const auto base = m4.train_labels();
  std::vector<int> perm{0, 1, 2, 3};
  double total = 0;
  int count = 0;
  do {
    int moved = 0;
    for (std::size_t i = 0; i < 4; ++i) moved += base[static_cast<std::size_t>(perm[i])] != base[i];
    total += moved / 4.0;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double exact4 = total / count;
  auto g = g2pc(m4, d4, identity_grouping(1), derive(seed, {1}), {10000, workers()});
  const Eigen::RowVectorXd v = g.pct_change.row(0);
  const double mu = v.mean();
  const double se = std::sqrt((v.array() - mu).square().sum() / (v.size() - 1) / v.size());
  const bool ok4 = std::abs(mu - exact4) <= 3 * se;
  pass = pass && ok4;
  detail += "g2pc 4-sample: exhaustive " + fmt(exact4) + " over 24 permutations, empirical " + fmt(mu) + " +- " +
            fmt(se, 5) + " (K=10000)\n";

  Matrix three(3, 1);
  three << 0, 1, 10;
  DataMatrix d3(three);
  auto m3 = fit(Algorithm::KMeans, d3, with_clusters(2), seed);
  // donors for sample 0 with M=2: every 2-subset of {1, 2}; enumerate
  const auto labels3 = m3.train_labels();
  double exact3 = 0;
  {
    const std::vector<std::size_t> donors{1, 2};
    int changed = 0;
    for (auto d : donors) changed += labels3[d] != labels3[0];
    exact3 = changed / 2.0;
  }
  auto l = l2pc(m3, d3, identity_grouping(1), derive(seed, {2}), 2, {10000, workers()}, std::vector<std::size_t>{0});
  Eigen::Map<const Eigen::RowVectorXd> lv(l.values.data(), static_cast<Eigen::Index>(l.values.size()));
  const double lmu = lv.mean();
  const double lse = std::sqrt((lv.array() - lmu).square().sum() / (lv.size() - 1) / lv.size());
  const bool ok3 = std::abs(lmu - exact3) <= 3 * lse;
  pass = pass && ok3;
  detail += "l2pc 3-sample (sample 0, M=2): enumerated " + fmt(exact3) + ", empirical " + fmt(lmu) + " +- " +
            fmt(lse, 5) + " (K=10000)\n";
  const double secs = clock.seconds();
  pass = pass && secs < 30;
  detail += "runtime " + fmt(secs, 2) + " s";
  report("AC5", pass, "Exhaustive-oracle equivalence", detail);
}

struct SelectionCounts {
  std::map<Algorithm, int> hits;
};

SelectionCounts selection_counts(const SyntheticSpec& spec, const std::vector<double>& candidates, int truth, bool standardize,
                                 RandomSeed seed) {
  const std::vector<Algorithm> algs{Algorithm::KMeans, Algorithm::GMM, Algorithm::Agglomerative, Algorithm::FuzzyCMeans};
  auto batch = generate_batch(spec, kReplicates, seed);
  std::vector<std::vector<int>> hit(batch.size(), std::vector<int>(algs.size()));
  parallel_for(batch.size(), workers(), [&](std::size_t r) {
    auto data = standardize ? zscore(batch[r].data) : batch[r].data;
    for (std::size_t a = 0; a < algs.size(); ++a) {
      auto rep = select_clusters(algs[a], data, candidates, ClusterParams{}, derive(seed, {r, a}));
      hit[r][a] = rep.selected && *rep.selected == truth;
    }
  });
  SelectionCounts out;
  for (std::size_t a = 0; a < algs.size(); ++a)
    for (const auto& h : hit) out.hits[algs[a]] += h[a];
  return out;
}

std::string counts_text(const SelectionCounts& c) {
  std::string s;
  for (const auto& [alg, n] : c.hits) s += (s.empty() ? "" : ", ") + std::string(to_string(alg)) + " " + std::to_string(n);
  return s;
}

void ac6() {
  const auto seed = seed_for("ac6");
  auto one = selection_counts(SyntheticSpec::dataset_one(), {2, 3, 4, 5, 6}, 2, false, derive(seed, {1}));
  auto two = selection_counts(SyntheticSpec::dataset_two(), {2, 3, 4, 5, 6, 7, 8}, 4, false, derive(seed, {2}));
  bool pass = true;
  for (const auto& [alg, n] : one.hits) pass = pass && n >= 95;
  for (const auto& [alg, n] : two.hits) pass = pass && n >= 90;
  auto one_z = selection_counts(SyntheticSpec::dataset_one(), {2, 3, 4, 5, 6}, 2, true, derive(seed, {1}));
  auto two_z = selection_counts(SyntheticSpec::dataset_two(), {2, 3, 4, 5, 6, 7, 8}, 4, true, derive(seed, {2}));
  report("AC6", pass, "Cluster-recovery sanity (silhouette selection, 100 replicates, generated data as-is)",
         "Dataset One, C=2 chosen: " + counts_text(one) + " (need >= 95 each)\n" +
             "Dataset Two, C=4 chosen: " + counts_text(two) + " (need >= 90 each)\n" +
             "for information, after z-scoring: Dataset One " + counts_text(one_z) + "; Dataset Two " + counts_text(two_z));
}

void ac7() {
  const auto seed = seed_for("ac7");
  auto data = zscore(generate(SyntheticSpec::dataset_one(), seed).data);
  auto model = fit(Algorithm::KMeans, data, with_clusters(2), seed);
  NestedCvOptions opts;
  opts.workers = workers();
  auto effects = nested_cv_effects(data, model.train_labels().labels(), identity_grouping(5), derive(seed, {1}), opts);
  auto g = g2pc(model, data, identity_grouping(5), derive(seed, {2}), {kRepeats, workers()});
  const auto g2pc_top = summarize(g).front().group;
  const auto effect_top = effects.rank_by_magnitude().front();
  const double auc = effects.mean_auc();
  const bool pass = auc > 0.99 && g2pc_top == effect_top;
  std::vector<double> g2pc_means;
  for (const auto& s : g.group_stats()) g2pc_means.push_back(s.mean);
  report("AC7", pass, "LR-ENR cross-validation on KMeans labels",
         "mean test AUC " + fmt(auc, 5) + " (need > 0.99)\n" + "grand mean effects f1..f5 = " +
             join(effects.grand_mean_effect, 5) + "; top |effect| = feature " + std::to_string(effect_top + 1) + "\n" +
             "G2PC means f1..f5 = " + join(g2pc_means) + "; top = feature " + std::to_string(g2pc_top + 1));
}

std::map<std::string, std::string> result_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    out[fs::relative(e.path(), dir).generic_string()] = io::read_text(e.path());
  }
  return out;
}

void ac8() {
  const auto root = fs::temp_directory_path() / "clex_acceptance_ac8";
  fs::remove_all(root);
  const char* configs[] = {
      R"({"seed": 5, "data": {"source": "synthetic", "dataset": "one", "replicates": 2},
          "clustering": {"algorithm": "kmeans", "clusters": 2},
          "explainers": {"g2pc": {"repeats": 100}, "l2pc": {"repeats": 20, "perturbations": 30},
                         "pfi": {"repeats": 50}, "baseline": {}}})",
      R"({"seed": 6, "data": {"source": "synthetic", "dataset": "two"},
          "clustering": {"algorithm": "gmm", "select": [2, 3, 4, 5]},
          "explainers": {"g2pc": {"repeats": 100}, "l2pc": {"repeats": 10, "perturbations": 10}}})",
      R"({"seed": 7, "data": {"source": "synthetic", "dataset": "one"},
          "clustering": {"algorithm": "dbscan", "select": "auto"},
          "explainers": {"g2pc": {"repeats": 50}, "l2pc": {"repeats": 10, "perturbations": 10}}})"};
  bool pass = true;
  std::string detail;
  int index = 0;
  for (const char* text : configs) {
    auto parsed = parse_config(Json::parse(text), root);
    if (!parsed.config) {
      pass = false;
      detail += "config " + std::to_string(index) + " rejected\n";
      continue;
    }
    std::map<std::string, std::string> first;
    bool same = true;
    std::size_t files = 0;
    for (unsigned w : {1u, 4u}) {
      auto c = *parsed.config;
      c.workers = w;
      c.output_dir = root / ("config" + std::to_string(index) + "_w" + std::to_string(w));
      auto outcome = run_experiment(c);
      if (outcome.exit_code != 0) {
        same = false;
        detail += "config " + std::to_string(index) + " failed with workers=" + std::to_string(w) + "\n";
        break;
      }
      auto files_now = result_files(c.output_dir);
      files = files_now.size();
      if (w == 1) {
        first = std::move(files_now);
      } else {
        same = same && files_now == first;
      }
    }
    pass = pass && same;
    detail += "config " + std::to_string(index) + " (" + parsed.config->to_json()["clustering"]["algorithm"].get<std::string>() +
              "): " + std::to_string(files) + " result files, workers 1 vs 4 " + (same ? "identical" : "DIFFER") + "\n";
    ++index;
  }
  fs::remove_all(root);
  report("AC8", pass, "Determinism and parallel safety (byte-identical result files)", detail);
}

void ac9() {
  Clock clock;
  struct Item {
    const char* name;
    props::Failures failures;
  };
  std::vector<Item> items;
  items.push_back({"constant-group zero importance", props::constant_group_zero_importance(6)});
  items.push_back({"percent change in [0,1]", props::percent_change_in_unit_interval(8)});
  items.push_back({"L2PC granularity 1/M", props::l2pc_granularity(12)});
  items.push_back({"z-score idempotence", props::zscore_idempotent(40)});
  items.push_back({"GMM posterior / FCM membership normalization", props::gmm_posteriors_normalized(8)});
  items.push_back({"assign tie determinism", props::assign_ties_deterministic()});
  bool pass = true;
  std::string detail;
  for (const auto& item : items) {
    pass = pass && item.failures.empty();
    detail += std::string(item.name) + ": " + (item.failures.empty() ? "ok" : item.failures.front()) + "\n";
  }
  const double secs = clock.seconds();
  pass = pass && secs < 60;
  detail += "suite runtime " + fmt(secs, 2) + " s";
  report("AC9", pass, "Property suites", detail);
}

}  // namespace

int main() {
  Clock total;
  std::printf("acceptance run, root seed %llu, %u worker(s)\n", static_cast<unsigned long long>(kRoot.value), workers());
  try {
    auto pooled = dataset_one_g2pc();
    ac1(pooled);
    ac2(pooled);
    ac3();
    ac4();
    ac5();
    ac6();
    ac7();
    ac8();
    ac9();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criterion(s) failed; total %.1f s\n", failures, total.seconds());
  return failures == 0 ? 0 : 1;
}
