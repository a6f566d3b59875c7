#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softgem/dataset.hpp"

namespace softgem {

enum class StreamKind { Permuted, SplitDisjoint, SplitWithReplacement };

std::string to_string(StreamKind kind);
StreamKind parse_stream_kind(const std::string &text);

struct StreamConfig {
  int total_tasks = 5;
  int cv_tasks = 0; // leading tasks reserved for hyperparameter selection
  StreamKind kind = StreamKind::Permuted;
  int classes_per_task = 10; // split streams only; permuted tasks keep every class
  std::uint64_t seed = 0;
  // Per-task subsample sizes; unset keeps the whole base split.
  std::optional<Eigen::Index> max_train_per_task;
  std::optional<Eigen::Index> max_test_per_task;

  void validate() const;
};

struct TaskDataset {
  int task_id = 0;
  Dataset train;
  Dataset test;
  // Original base-dataset class of each re-indexed label.
  std::vector<int> class_names;
};

// Task 1 keeps the identity permutation; task k > 1 applies one fixed pixel
// permutation, drawn from the stream seed, to both its train and test inputs.
std::vector<TaskDataset> make_permuted_stream(const TrainTest &base, const StreamConfig &cfg);

// Class subsets per task with labels re-indexed to [0, classes_per_task).
// Disjoint mode partitions a seeded shuffle of the label space; replacement
// mode draws each task's classes independently, so tasks may share classes.
std::vector<TaskDataset> make_split_stream(const TrainTest &base, const StreamConfig &cfg,
                                           bool with_replacement);

// Dispatches on cfg.kind.
std::vector<TaskDataset> make_stream(const TrainTest &base, const StreamConfig &cfg);

struct CvEvalSplit {
  std::vector<TaskDataset> cv;
  std::vector<TaskDataset> eval;
};

CvEvalSplit split_cv_eval(std::vector<TaskDataset> stream, int cv_tasks);

// Gaussian clusters around unit-norm random class means.
Dataset make_synthetic_base(int classes, int dim, int per_class, std::uint64_t seed,
                            double sigma = 0.3);

// Seeded holdout split, stratified per class.
TrainTest train_test_split(const Dataset &data, double test_fraction, std::uint64_t seed);

} // namespace softgem
