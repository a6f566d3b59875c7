#include "softgem/dataset.hpp"

namespace softgem {

Dataset select(const Dataset &source, const std::vector<Eigen::Index> &indices) {
  Dataset out;
  out.num_classes = source.num_classes;
  out.inputs.resize(source.dim(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    out.inputs.col(static_cast<Eigen::Index>(j)) = source.inputs.col(indices[j]);
    out.labels.push_back(source.labels[static_cast<std::size_t>(indices[j])]);
  }
  return out;
}

Batch Batch::from_dataset(const Dataset &data, const std::vector<Eigen::Index> &indices,
                          int task_id) {
  Batch b;
  b.inputs.resize(data.dim(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    b.inputs.col(static_cast<Eigen::Index>(j)) = data.inputs.col(indices[j]);
    b.labels.push_back(data.labels[static_cast<std::size_t>(indices[j])]);
  }
  b.task_ids.assign(indices.size(), task_id);
  return b;
}

Batch Batch::from_dataset(const Dataset &data, int task_id) {
  Batch b;
  b.inputs = data.inputs;
  b.labels = data.labels;
  b.task_ids.assign(data.labels.size(), task_id);
  return b;
}

Batch Batch::concat(const Batch &other) const {
  if (empty())
    return other;
  if (other.empty())
    return *this;
  Batch b;
  b.inputs.resize(inputs.rows(), size() + other.size());
  b.inputs << inputs, other.inputs;
  b.labels = labels;
  b.labels.insert(b.labels.end(), other.labels.begin(), other.labels.end());
  b.task_ids = task_ids;
  b.task_ids.insert(b.task_ids.end(), other.task_ids.begin(), other.task_ids.end());
  return b;
}

} // namespace softgem
