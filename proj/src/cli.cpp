#include "softgem/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "softgem/config.hpp"
#include "softgem/epsilon_search.hpp"
#include "softgem/errors.hpp"
#include "softgem/harness.hpp"

namespace softgem {

namespace fs = std::filesystem;

namespace {

void print_rows(std::ostream &out, const std::vector<AggregateRow> &rows) {
  for (const auto &row : rows)
    out << row.label << ": runs=" << row.runs << " A_T=" << row.mean.average_accuracy
        << " F_T=" << row.mean.forgetting << " BWT=" << row.mean.backward_transfer
        << " FWT=" << row.mean.forward_transfer << " LCA_10=" << row.mean.lca << '\n';
}

std::vector<ExperimentConfig> load_config_dir(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw IoError("config directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ConfigError("no *.json configs in " + dir.string());
  std::vector<ExperimentConfig> configs;
  for (const auto &f : files)
    configs.push_back(load_config(f));
  return configs;
}

double parse_parabola_peak(const std::string &objective) {
  const std::string prefix = "parabola:";
  if (objective.rfind(prefix, 0) != 0)
    throw ConfigError("objective must look like parabola:PEAK, got '" + objective + "'");
  try {
    return std::stod(objective.substr(prefix.size()));
  } catch (const std::exception &) {
    throw ConfigError("bad parabola peak in '" + objective + "'");
  }
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

} // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Continual-learning benchmark harness for GEM-family gradient rules", "softgem"};
  app.require_subcommand(1);

  int jobs = 1;
  std::string config_path, configs_dir, out_dir, record_path, objective, csv_path;
  std::uint64_t seed = 0;
  int points = 11, repeats = 5;

  auto *run = app.add_subcommand("run", "Run one experiment config over its seeds");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  auto *seed_opt = run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto *suite = app.add_subcommand("suite", "Run every config in a directory");
  suite->add_option("--configs", configs_dir, "Directory of *.json configs")->required();
  suite->add_option("--out", out_dir, "Output directory")->required();
  suite->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto *search = app.add_subcommand("search-eps", "Interval-refinement search for epsilon");
  search->add_option("--config", config_path, "SOFTGEM base config (JSON)");
  search->add_option("--out", out_dir, "Output directory")->required();
  search->add_option("--points", points, "Grid points per repeat (N)")->check(CLI::Range(3, 1000));
  search->add_option("--repeats", repeats, "Maximum repeats (M)")->check(CLI::NonNegativeNumber);
  search->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  search->add_option("--objective", objective, "Analytic objective instead of training, parabola:PEAK");

  auto *metrics = app.add_subcommand("metrics", "Recompute metrics from a stored run record");
  metrics->add_option("--record", record_path, "Run record (JSON)")->required();
  metrics->add_option("--out", csv_path, "Also write a one-row CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err);
  }

  try {
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (*seed_opt)
        cfg.seeds = {seed};
      const auto summary = run_suite({cfg}, out_dir, jobs);
      for (const auto &f : summary.record_files)
        out << "wrote " << f.string() << '\n';
      print_rows(out, summary.rows);
    } else if (*suite) {
      const auto summary = run_suite(load_config_dir(configs_dir), out_dir, jobs);
      out << "wrote " << summary.record_files.size() << " records to " << out_dir << '\n';
      print_rows(out, summary.rows);
    } else if (*search) {
      EpsilonTrainer trainer;
      if (!objective.empty()) {
        const double peak = parse_parabola_peak(objective);
        trainer = [peak](double e) { return EpsilonScore{-(e - peak) * (e - peak), 0.0, 0.0}; };
      } else {
        if (config_path.empty())
          throw ConfigError("search-eps needs --config or --objective");
        ExperimentConfig cfg = load_config(config_path);
        trainer = [cfg, jobs](double e) { return score_epsilon(cfg, e, jobs); };
      }
      const SearchResult result = run_search(points, repeats, trainer);
      ensure_dir(out_dir);
      std::ofstream csv(fs::path(out_dir) / "search_history.csv");
      if (!csv)
        throw IoError("cannot write " + (fs::path(out_dir) / "search_history.csv").string());
      write_history_csv(csv, result.history);
      nlohmann::json summary = {{"best_epsilon", result.best_epsilon},
                                {"best_A_T_mean", result.best_score.accuracy_mean},
                                {"repeats", result.repeats},
                                {"final_interval", result.final_interval}};
      std::ofstream(fs::path(out_dir) / "search_result.json") << summary.dump(2) << '\n';
      out << "best epsilon " << result.best_epsilon << " after " << result.repeats << " repeats\n";
    } else if (*metrics) {
      const RunRecord rec = load_record(record_path);
      const int beta = rec.config.value("lca_beta", 10);
      RunRecord fresh = rec;
      fresh.metrics = summarize(rec.accuracy, rec.learning_curve, rec.baseline, beta);
      out << record_to_json(fresh)["metrics"].dump(2) << '\n';
      if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv)
          throw IoError("cannot write " + csv_path);
        write_runs_csv(csv, {fresh});
      }
    }
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

} // namespace softgem
