#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "softgem/config.hpp"
#include "softgem/epsilon_search.hpp"
#include "softgem/metrics.hpp"
#include "softgem/mlp.hpp"
#include "softgem/task_streams.hpp"

namespace softgem {

inline constexpr int kRecordVersion = 1;

struct StepCounts {
  std::int64_t steps = 0;           // optimizer steps taken
  std::int64_t constrained = 0;     // steps where a reference gradient was available
  std::int64_t projections = 0;     // steps where a rule replaced g
  std::int64_t zero_updates = 0;    // A-A-GEM steps skipped on a zero direction
  std::int64_t degenerate = 0;      // zero g or g_ref; plain step taken

  bool operator==(const StepCounts &) const = default;
};

struct RunRecord {
  std::string config_hash;
  std::string label;
  nlohmann::json config;
  std::uint64_t seed = 0;
  AccuracyMatrix accuracy{1};
  std::vector<std::vector<double>> task_curves; // per task, Z[0..beta]
  std::vector<double> learning_curve;           // averaged over tasks
  std::vector<double> baseline;                 // untrained accuracy per task
  StepCounts counts;
  MetricSummary metrics;
  // Kept out of the record file so records stay byte-reproducible.
  std::vector<double> wall_clock_seconds;
};

// Observer hook called after every optimizer step with the 1-based task,
// the step index within the run and the updated parameters.
using StepObserver = std::function<void(int task, std::int64_t step, const ModelState &model)>;

// Base train/test split for a config (synthetic or IDX).
TrainTest build_base(const ExperimentConfig &cfg);
// Tasks trained by a run of `cfg` with `seed`: the eval or cv part of the
// stream, depending on cfg.phase.
std::vector<TaskDataset> build_tasks(const ExperimentConfig &cfg, const TrainTest &base,
                                     std::uint64_t seed);

RunRecord train_sequence(const ExperimentConfig &cfg, std::uint64_t seed,
                         const StepObserver &observer = {});

nlohmann::json record_to_json(const RunRecord &record);
RunRecord record_from_json(const nlohmann::json &j);
// Canonical serialized form; identical runs give identical bytes.
std::string serialize_record(const RunRecord &record);
RunRecord load_record(const std::filesystem::path &path);

struct AggregateRow {
  std::string label;
  int runs = 0;
  MetricSummary mean;
  MetricSummary stddev; // population standard deviation over seeds
};

std::vector<AggregateRow> aggregate(const std::vector<RunRecord> &records);

// Column order: method, seed, A_T, F_T, a_1, a_t, BWT, FWT, LCA_10
void write_runs_csv(std::ostream &out, const std::vector<RunRecord> &records);
void write_aggregate_csv(std::ostream &out, const std::vector<AggregateRow> &rows);
nlohmann::json aggregate_to_json(const std::vector<AggregateRow> &rows);

struct SuiteSummary {
  std::vector<RunRecord> records; // config order, then seed order
  std::vector<AggregateRow> rows;
  std::vector<std::filesystem::path> record_files;
};

// Runs every (config, seed) pair on up to `jobs` threads and writes
//   records/<label>__seed<seed>.json   one RunRecord per run
//   timing/<label>__seed<seed>.json    wall-clock per task
//   runs.csv                           one row per run
//   aggregate.csv, aggregate.json      mean and std per config
SuiteSummary run_suite(const std::vector<ExperimentConfig> &configs,
                       const std::filesystem::path &output_dir, int jobs = 1);

// Mean/std of A_T and mean F_T of a SOFTGEM population at `epsilon`,
// over cfg.seeds, on the cross-validation tasks when cfg has any.
EpsilonScore score_epsilon(const ExperimentConfig &cfg, double epsilon, int jobs = 1);

// Applies `fn` to 0..count-1 on up to `jobs` threads; rethrows the first error.
void parallel_for(int count, int jobs, const std::function<void(int)> &fn);

} // namespace softgem
