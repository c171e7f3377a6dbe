#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clex/clustering.hpp"
#include "clex/datagen.hpp"
#include "clex/random.hpp"
#include "clex/serialize.hpp"

namespace clex {

inline constexpr const char* kVersion = "0.1.0";

enum class DataSource { Synthetic, Csv, Panel };
enum class GroupingSource { Identity, File, DomainPairs };

struct ExperimentConfig {
  DataSource source = DataSource::Synthetic;
  SyntheticId dataset = SyntheticId::One;
  int samples_per_cluster = 50;
  int replicates = 1;
  std::filesystem::path data_path;    // csv file or panel directory
  std::filesystem::path labels_path;  // optional csv labels
  std::filesystem::path domains_path; // panel domain map
  bool zscore = true;

  Algorithm algorithm = Algorithm::KMeans;
  ClusterParams params;
  std::vector<double> select;  // cluster counts or eps values
  bool select_eps_auto = false;

  GroupingSource grouping = GroupingSource::Identity;
  std::filesystem::path grouping_path;

  bool run_g2pc = false;
  int g2pc_repeats = 100;
  bool run_l2pc = false;
  int l2pc_repeats = 100;
  int l2pc_perturbations = 30;
  std::vector<std::size_t> l2pc_samples;
  bool run_pfi = false;
  int pfi_repeats = 100;
  bool run_baseline = false;
  int baseline_outer = 10;
  int baseline_inner = 10;

  RandomSeed seed{0};
  unsigned workers = 1;
  std::filesystem::path output_dir = "clex-out";

  /// Config echo with absolute paths; feeding it back to `run` repeats the experiment.
  Json to_json() const;
};

struct Diagnostic {
  std::string path;  // JSON pointer-like location
  std::string message;
};

struct ParsedConfig {
  std::optional<ExperimentConfig> config;
  std::vector<Diagnostic> diagnostics;
};

/// Parses and validates a config document. Relative paths resolve against
/// `base_dir`. Collects every problem instead of stopping at the first.
ParsedConfig parse_config(const Json& document, const std::filesystem::path& base_dir);

/// Reads a config file (or a manifest written by `run`) and validates it.
ParsedConfig load_config(const std::filesystem::path& path);
std::vector<Diagnostic> validate(const std::filesystem::path& config_path);

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::optional<Json> error;
};

/// Executes the pipeline and writes all outputs under config.output_dir.
RunOutcome run_experiment(const ExperimentConfig& config);

/// Majority-truth label per cluster, used to flag correctly clustered samples.
std::vector<int> match_clusters_to_truth(const ClusterAssignment& clusters, const std::vector<int>& truth);

}  // namespace clex
