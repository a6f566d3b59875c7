#pragma once

#include <vector>

#include <Eigen/Dense>

namespace softgem {

// Labelled samples stored column-wise: inputs.col(i) carries labels[i].
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
  int num_classes = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  Eigen::Index dim() const { return inputs.rows(); }
  bool empty() const { return labels.empty(); }
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Columns of `source` selected by `indices`, in that order.
Dataset select(const Dataset &source, const std::vector<Eigen::Index> &indices);

// A mini-batch where every sample names the task head it is scored on.
struct Batch {
  Eigen::MatrixXd inputs;
  std::vector<int> task_ids;
  std::vector<int> labels;

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  bool empty() const { return labels.empty(); }

  static Batch from_dataset(const Dataset &data, const std::vector<Eigen::Index> &indices,
                            int task_id);
  static Batch from_dataset(const Dataset &data, int task_id);
  // Samples of `other` placed after the samples of this batch.
  Batch concat(const Batch &other) const;
};

} // namespace softgem
