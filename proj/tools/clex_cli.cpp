// Command-line driver: run/validate experiment configs, generate synthetic
// benchmarks, and turn time-series panels into connectivity features.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "clex/datagen.hpp"
#include "clex/experiment.hpp"
#include "clex/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int report_error(const std::string& stage, const std::string& code, const std::string& message, int exit_code) {
  clex::Json err{{"stage", stage}, {"error", code}, {"message", message}};
  std::cerr << err.dump() << "\n";
  return exit_code;
}

clex::Json diagnostics_json(const std::vector<clex::Diagnostic>& diags) {
  clex::Json out = clex::Json::array();
  for (const auto& d : diags) out.push_back({{"path", d.path}, {"message", d.message}});
  return out;
}

clex::SyntheticSpec load_synthetic_spec(const std::string& arg) {
  if (arg == "one") return clex::SyntheticSpec::dataset_one();
  if (arg == "two") return clex::SyntheticSpec::dataset_two();
  // JSON file: {"dataset": "one"|"two", "samples_per_cluster": n} or explicit means/stds.
  auto j = clex::Json::parse(clex::io::read_text(arg));
  const int per = j.value("samples_per_cluster", 50);
  if (j.contains("means")) {
    clex::SyntheticSpec spec;
    spec.samples_per_cluster = per;
    auto to_matrix = [](const clex::Json& rows) {
      clex::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != static_cast<std::size_t>(m.cols())) {
          throw clex::Error(clex::ErrorCode::ParseError, "ragged matrix in synthetic spec");
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
      }
      return m;
    };
    spec.means = to_matrix(j.at("means"));
    spec.stds = to_matrix(j.at("stds"));
    spec.validate();
    return spec;
  }
  const auto ds = j.value("dataset", std::string("one"));
  if (ds == "one") return clex::SyntheticSpec::dataset_one(per);
  if (ds == "two") return clex::SyntheticSpec::dataset_two(per);
  throw clex::Error(clex::ErrorCode::ConfigInvalid, "dataset must be 'one' or 'two'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clex: algorithm-agnostic explainability for clustering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", clex::kVersion);

  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file (or a previous manifest)");
  std::string run_config;
  run->add_option("config", run_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the root seed");
  run->add_option("--workers", workers, "Worker threads for explainers")->check(CLI::PositiveNumber);
  run->add_option("--out-dir", out_dir, "Override the output directory");

  auto* val = app.add_subcommand("validate", "Check a config file and list every problem");
  std::string val_config;
  val->add_option("config", val_config, "Experiment config JSON")->required();

  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset (data.csv + labels.csv)");
  std::string gen_spec, gen_out;
  gen->add_option("synthetic-spec", gen_spec, "'one', 'two', or a JSON spec file")->required();
  gen->add_option("out", gen_out, "Output directory")->required();
  gen->add_option("--seed", seed, "Root seed");
  gen->add_option("--out-dir", out_dir, "Alias for the output directory");

  auto* fnc = app.add_subcommand("fnc", "Connectivity features from a directory of per-subject time series");
  std::string fnc_dir, fnc_out, fnc_domains;
  bool fnc_zscore = false;
  fnc->add_option("panel-dir", fnc_dir, "Directory of subject CSVs and domains.json")->required()->check(CLI::ExistingDirectory);
  fnc->add_option("out", fnc_out, "Output directory")->required();
  fnc->add_option("--domains", fnc_domains, "Domain map JSON (default: <panel-dir>/domains.json)");
  fnc->add_flag("--zscore", fnc_zscore, "Standardize the connectivity features");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      auto parsed = clex::load_config(run_config);
      if (!parsed.config) {
        clex::Json err{{"stage", "config"}, {"error", "ConfigInvalid"}, {"diagnostics", diagnostics_json(parsed.diagnostics)}};
        std::cerr << err.dump(2) << "\n";
        return kExitConfig;
      }
      auto config = *parsed.config;
      if (seed) config.seed = clex::RandomSeed{*seed};
      if (workers) config.workers = *workers;
      if (!out_dir.empty()) config.output_dir = fs::absolute(out_dir);
      auto outcome = clex::run_experiment(config);
      if (outcome.error) {
        std::cerr << outcome.error->dump() << "\n";
        return outcome.exit_code;
      }
      std::cout << "wrote " << outcome.files.size() << " files to " << config.output_dir.string() << "\n";
      return kExitOk;
    }

    if (*val) {
      if (!fs::exists(val_config)) return report_error("validate", "UnreadableFile", "cannot read " + val_config, kExitConfig);
      auto diags = clex::validate(val_config);
      std::cout << diagnostics_json(diags).dump(2) << "\n";
      return diags.empty() ? kExitOk : kExitConfig;
    }

    if (*gen) {
      const auto spec = load_synthetic_spec(gen_spec);
      const fs::path out = out_dir.empty() ? fs::path(gen_out) : fs::path(out_dir);
      auto data = clex::generate(spec, clex::RandomSeed{seed.value_or(0)});
      clex::io::write_matrix_csv(out / "data.csv", data.data);
      clex::io::write_labels_csv(out / "labels.csv", data.truth.labels());
      std::cout << "wrote " << data.data.rows() << "x" << data.data.cols() << " dataset to " << out.string() << "\n";
      return kExitOk;
    }

    if (*fnc) {
      const fs::path dir(fnc_dir);
      const fs::path domains = fnc_domains.empty() ? dir / "domains.json" : fs::path(fnc_domains);
      auto panel = clex::io::read_panel(dir, domains);
      auto features = clex::connectivity_features(panel);
      auto data = fnc_zscore ? clex::zscore(features.data) : features.data;
      const fs::path out(fnc_out);
      clex::io::write_matrix_csv(out / "features.csv", data);
      clex::io::write_grouping_csv(out / "grouping.csv", features.grouping, data);
      std::cout << "wrote " << data.rows() << " subjects x " << data.cols() << " features in "
                << features.grouping.num_groups() << " domain-pair groups to " << out.string() << "\n";
      return kExitOk;
    }
  } catch (const clex::Error& e) {
    const bool config_error = e.code() == clex::ErrorCode::ConfigInvalid || e.code() == clex::ErrorCode::UnreadableFile ||
                              e.code() == clex::ErrorCode::ParseError;
    return report_error(app.get_subcommands().front()->get_name(), std::string(clex::to_string(e.code())), e.what(),
                        config_error ? kExitConfig : kExitRuntime);
  } catch (const std::exception& e) {
    return report_error(app.get_subcommands().front()->get_name(), "RuntimeError", e.what(), kExitRuntime);
  }
  return kExitOk;
}
