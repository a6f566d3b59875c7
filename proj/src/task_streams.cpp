#include "softgem/task_streams.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "softgem/errors.hpp"
#include "softgem/random.hpp"

namespace softgem {

std::string to_string(StreamKind kind) {
  switch (kind) {
  case StreamKind::Permuted:
    return "permuted";
  case StreamKind::SplitDisjoint:
    return "split_disjoint";
  case StreamKind::SplitWithReplacement:
    return "split_with_replacement";
  }
  return "unknown";
}

StreamKind parse_stream_kind(const std::string &text) {
  if (text == "permuted")
    return StreamKind::Permuted;
  if (text == "split_disjoint")
    return StreamKind::SplitDisjoint;
  if (text == "split_with_replacement")
    return StreamKind::SplitWithReplacement;
  throw InvalidStream("unknown stream kind '" + text + "'");
}

void StreamConfig::validate() const {
  if (total_tasks < 1)
    throw InvalidStream("total_tasks must be >= 1");
  if (cv_tasks < 0 || cv_tasks >= total_tasks)
    throw InvalidStream("cv_tasks must satisfy 0 <= cv_tasks < total_tasks");
  if (kind != StreamKind::Permuted && classes_per_task < 1)
    throw InvalidStream("classes_per_task must be >= 1");
  if ((max_train_per_task && *max_train_per_task < 1) || (max_test_per_task && *max_test_per_task < 1))
    throw InvalidStream("per-task sample caps must be >= 1");
}

namespace {

std::vector<Eigen::Index> iota_indices(Eigen::Index n) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

// Seeded subset of at most `cap` columns, kept in original order.
std::vector<Eigen::Index> subsample(Eigen::Index n, std::optional<Eigen::Index> cap, Rng &rng) {
  auto idx = iota_indices(n);
  if (!cap || *cap >= n)
    return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(*cap));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset permute_features(Dataset data, const std::vector<Eigen::Index> &perm) {
  Eigen::MatrixXd out(data.inputs.rows(), data.inputs.cols());
  for (std::size_t r = 0; r < perm.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = data.inputs.row(perm[r]);
  data.inputs = std::move(out);
  return data;
}

// Samples whose label is in `classes`, relabelled by position in `classes`.
Dataset restrict_classes(const Dataset &data, const std::vector<int> &classes) {
  std::vector<int> relabel(static_cast<std::size_t>(std::max(data.num_classes, 1)), -1);
  for (std::size_t k = 0; k < classes.size(); ++k)
    relabel[static_cast<std::size_t>(classes[k])] = static_cast<int>(k);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (relabel[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])] >= 0)
      keep.push_back(i);
  Dataset out = select(data, keep);
  for (int &y : out.labels)
    y = relabel[static_cast<std::size_t>(y)];
  out.num_classes = static_cast<int>(classes.size());
  return out;
}

} // namespace

std::vector<TaskDataset> make_permuted_stream(const TrainTest &base, const StreamConfig &cfg) {
  cfg.validate();
  if (cfg.kind != StreamKind::Permuted)
    throw InvalidStream("make_permuted_stream requires kind = permuted");
  if (base.train.dim() != base.test.dim())
    throw InvalidStream("train and test feature dimensions differ");
  Rng perm_rng = named_stream(cfg.seed, "permutations");
  Rng sample_rng = named_stream(cfg.seed, "task-subsample");
  const Eigen::Index dim = base.train.dim();

  std::vector<TaskDataset> stream;
  for (int k = 1; k <= cfg.total_tasks; ++k) {
    auto perm = iota_indices(dim);
    if (k > 1)
      std::shuffle(perm.begin(), perm.end(), perm_rng);
    TaskDataset task;
    task.task_id = k;
    task.train = permute_features(select(base.train, subsample(base.train.size(), cfg.max_train_per_task, sample_rng)), perm);
    task.test = permute_features(select(base.test, subsample(base.test.size(), cfg.max_test_per_task, sample_rng)), perm);
    task.class_names.resize(static_cast<std::size_t>(base.train.num_classes));
    std::iota(task.class_names.begin(), task.class_names.end(), 0);
    stream.push_back(std::move(task));
  }
  return stream;
}

std::vector<TaskDataset> make_split_stream(const TrainTest &base, const StreamConfig &cfg,
                                           bool with_replacement) {
  cfg.validate();
  const int total_classes = base.train.num_classes;
  const int per_task = cfg.classes_per_task;
  if (per_task > total_classes)
    throw InsufficientClasses("a task needs " + std::to_string(per_task) + " classes, base has " +
                              std::to_string(total_classes));
  if (!with_replacement && cfg.total_tasks * per_task > total_classes)
    throw InsufficientClasses(std::to_string(cfg.total_tasks) + " disjoint tasks x " +
                              std::to_string(per_task) + " classes exceed the " +
                              std::to_string(total_classes) + " available");

  Rng class_rng = named_stream(cfg.seed, "class-split");
  Rng sample_rng = named_stream(cfg.seed, "task-subsample");
  std::vector<int> all(static_cast<std::size_t>(total_classes));
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), class_rng);

  std::vector<TaskDataset> stream;
  for (int k = 1; k <= cfg.total_tasks; ++k) {
    std::vector<int> classes;
    if (with_replacement) {
      std::vector<int> pool = all;
      std::shuffle(pool.begin(), pool.end(), class_rng);
      classes.assign(pool.begin(), pool.begin() + per_task);
    } else {
      const auto first = all.begin() + static_cast<std::ptrdiff_t>((k - 1) * per_task);
      classes.assign(first, first + per_task);
    }
    std::sort(classes.begin(), classes.end());
    TaskDataset task;
    task.task_id = k;
    const Dataset train = restrict_classes(base.train, classes);
    const Dataset test = restrict_classes(base.test, classes);
    task.train = select(train, subsample(train.size(), cfg.max_train_per_task, sample_rng));
    task.test = select(test, subsample(test.size(), cfg.max_test_per_task, sample_rng));
    task.class_names = classes;
    stream.push_back(std::move(task));
  }
  return stream;
}

std::vector<TaskDataset> make_stream(const TrainTest &base, const StreamConfig &cfg) {
  switch (cfg.kind) {
  case StreamKind::Permuted:
    return make_permuted_stream(base, cfg);
  case StreamKind::SplitDisjoint:
    return make_split_stream(base, cfg, false);
  case StreamKind::SplitWithReplacement:
    return make_split_stream(base, cfg, true);
  }
  throw InvalidStream("unknown stream kind");
}

CvEvalSplit split_cv_eval(std::vector<TaskDataset> stream, int cv_tasks) {
  if (cv_tasks < 0 || static_cast<std::size_t>(cv_tasks) > stream.size())
    throw InvalidStream("cv_tasks outside [0, stream length]");
  CvEvalSplit out;
  const auto cut = stream.begin() + cv_tasks;
  out.cv.assign(std::make_move_iterator(stream.begin()), std::make_move_iterator(cut));
  out.eval.assign(std::make_move_iterator(cut), std::make_move_iterator(stream.end()));
  return out;
}

Dataset make_synthetic_base(int classes, int dim, int per_class, std::uint64_t seed, double sigma) {
  if (classes < 2)
    throw InvalidStream("synthetic base needs at least 2 classes");
  if (dim < 1 || per_class < 0)
    throw InvalidStream("synthetic base needs dim >= 1 and per_class >= 0");
  Rng rng = named_stream(seed, "synthetic-base");
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd means(dim, classes);
  for (int c = 0; c < classes; ++c) {
    for (int d = 0; d < dim; ++d)
      means(d, c) = normal(rng);
    means.col(c).normalize();
  }

  Dataset out;
  out.num_classes = classes;
  out.inputs.resize(dim, static_cast<Eigen::Index>(classes) * per_class);
  Eigen::Index col = 0;
  // interleave classes so any prefix is roughly balanced
  for (int i = 0; i < per_class; ++i)
    for (int c = 0; c < classes; ++c) {
      for (int d = 0; d < dim; ++d)
        out.inputs(d, col) = means(d, c) + sigma * normal(rng);
      out.labels.push_back(c);
      ++col;
    }
  return out;
}

TrainTest train_test_split(const Dataset &data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw InvalidStream("test_fraction must lie in [0, 1)");
  Rng rng = named_stream(seed, "holdout");
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(data.num_classes));
  for (Eigen::Index i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<Eigen::Index> train_idx, test_idx;
  for (auto &members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {select(data, train_idx), select(data, test_idx)};
}

} // namespace softgem
