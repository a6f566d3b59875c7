#include "softgem/mlp.hpp"

#include <cmath>
#include <map>
#include <string>

#include "softgem/errors.hpp"
#include "softgem/random.hpp"

namespace softgem {

namespace {

struct LayerSlice {
  Eigen::Index weights; // offset of W (out x in, column-major)
  Eigen::Index bias;    // offset of b
  Eigen::Index in;
  Eigen::Index out;
};

std::vector<LayerSlice> trunk_slices(const MlpArchitecture &arch) {
  std::vector<LayerSlice> slices;
  Eigen::Index offset = 0;
  Eigen::Index in = arch.input_dim;
  for (int width : arch.hidden_dims) {
    slices.push_back({offset, offset + in * width, in, width});
    offset += (in + 1) * width;
    in = width;
  }
  return slices;
}

LayerSlice head_slice(const MlpArchitecture &arch, int task_id) {
  Eigen::Index offset = 0;
  Eigen::Index in = arch.input_dim;
  for (int width : arch.hidden_dims) {
    offset += (in + 1) * width;
    in = width;
  }
  const Eigen::Index out = arch.classes_per_head;
  offset += static_cast<Eigen::Index>(task_id - 1) * (in + 1) * out;
  return {offset, offset + in * out, in, out};
}

using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

ConstMatrixMap weights_of(const Eigen::VectorXd &theta, const LayerSlice &s) {
  return ConstMatrixMap(theta.data() + s.weights, s.out, s.in);
}
ConstVectorMap bias_of(const Eigen::VectorXd &theta, const LayerSlice &s) {
  return ConstVectorMap(theta.data() + s.bias, s.out);
}

void check_task(const MlpArchitecture &arch, int task_id) {
  if (task_id < 1 || task_id > arch.heads)
    throw UnknownTask("task " + std::to_string(task_id) + " outside [1, " +
                      std::to_string(arch.heads) + "]");
}

void check_input(const MlpArchitecture &arch, Eigen::Index rows) {
  if (rows != arch.input_dim)
    throw ShapeMismatch("input has " + std::to_string(rows) + " features, model expects " +
                        std::to_string(arch.input_dim));
}

} // namespace

Eigen::Index MlpArchitecture::parameter_count() const {
  Eigen::Index count = 0;
  Eigen::Index in = input_dim;
  for (int width : hidden_dims) {
    count += (in + 1) * width;
    in = width;
  }
  return count + static_cast<Eigen::Index>(heads) * (in + 1) * classes_per_head;
}

void MlpArchitecture::validate() const {
  if (input_dim < 1 || heads < 1 || classes_per_head < 1)
    throw InvalidArchitecture("input_dim, heads and classes_per_head must be >= 1");
  for (int width : hidden_dims)
    if (width < 1)
      throw InvalidArchitecture("hidden layer width must be >= 1");
}

ModelState init_model(const MlpArchitecture &arch, std::uint64_t seed) {
  arch.validate();
  ModelState model{arch, Eigen::VectorXd::Zero(arch.parameter_count()), seed};
  Rng rng(mix64(seed));
  auto fill = [&](const LayerSlice &s) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < s.in * s.out; ++i)
      model.theta(s.weights + i) = u(rng);
  };
  for (const auto &s : trunk_slices(arch))
    fill(s);
  for (int h = 1; h <= arch.heads; ++h)
    fill(head_slice(arch, h));
  return model;
}

Eigen::MatrixXd forward_batch(const ModelState &model, const Eigen::MatrixXd &inputs, int task_id) {
  check_task(model.arch, task_id);
  check_input(model.arch, inputs.rows());
  Eigen::MatrixXd a = inputs;
  for (const auto &s : trunk_slices(model.arch)) {
    Eigen::MatrixXd z = weights_of(model.theta, s) * a;
    z.colwise() += bias_of(model.theta, s);
    a = z.cwiseMax(0.0);
  }
  const auto head = head_slice(model.arch, task_id);
  Eigen::MatrixXd logits = weights_of(model.theta, head) * a;
  logits.colwise() += bias_of(model.theta, head);
  return logits;
}

Eigen::VectorXd forward(const ModelState &model, const Eigen::VectorXd &x, int task_id) {
  return forward_batch(model, x, task_id).col(0);
}

LossAndGradient loss_and_grad(const ModelState &model, const Batch &batch) {
  if (batch.empty())
    throw EmptyBatch("loss_and_grad needs at least one sample");
  const MlpArchitecture &arch = model.arch;
  check_input(arch, batch.inputs.rows());

  std::map<int, std::vector<Eigen::Index>> by_task;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const int task = batch.task_ids[static_cast<std::size_t>(i)];
    const int label = batch.labels[static_cast<std::size_t>(i)];
    check_task(arch, task);
    if (label < 0 || label >= arch.classes_per_head)
      throw InvalidLabel("label " + std::to_string(label) + " outside [0, " +
                         std::to_string(arch.classes_per_head) + ")");
    by_task[task].push_back(i);
  }

  const auto trunk = trunk_slices(arch);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossAndGradient out{0.0, Eigen::VectorXd::Zero(model.theta.size())};

  for (const auto &[task, columns] : by_task) {
    const auto n = static_cast<Eigen::Index>(columns.size());
    // activations[0] is the input, activations[l + 1] the output of layer l
    std::vector<Eigen::MatrixXd> activations;
    activations.reserve(trunk.size() + 1);
    activations.emplace_back(batch.inputs.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j)
      activations[0].col(j) = batch.inputs.col(columns[static_cast<std::size_t>(j)]);
    for (const auto &s : trunk) {
      Eigen::MatrixXd z = weights_of(model.theta, s) * activations.back();
      z.colwise() += bias_of(model.theta, s);
      activations.push_back(z.cwiseMax(0.0));
    }

    const auto head = head_slice(arch, task);
    Eigen::MatrixXd logits = weights_of(model.theta, head) * activations.back();
    logits.colwise() += bias_of(model.theta, head);

    // softmax cross-entropy; delta = (p - onehot) / N
    Eigen::MatrixXd delta(logits.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const int label = batch.labels[static_cast<std::size_t>(columns[static_cast<std::size_t>(j)])];
      const double top = logits.col(j).maxCoeff();
      const Eigen::VectorXd e = (logits.col(j).array() - top).exp().matrix();
      const double sum = e.sum();
      out.loss += std::log(sum) - (logits(label, j) - top);
      delta.col(j) = e / sum;
      delta(label, j) -= 1.0;
    }
    delta *= inv_n;

    MatrixMap(out.grad.data() + head.weights, head.out, head.in) +=
        delta * activations.back().transpose();
    VectorMap(out.grad.data() + head.bias, head.out) += delta.rowwise().sum();

    Eigen::MatrixXd back = weights_of(model.theta, head).transpose() * delta;
    for (std::size_t l = trunk.size(); l-- > 0;) {
      const auto &s = trunk[l];
      back = (activations[l + 1].array() > 0.0).select(back, 0.0);
      MatrixMap(out.grad.data() + s.weights, s.out, s.in) += back * activations[l].transpose();
      VectorMap(out.grad.data() + s.bias, s.out) += back.rowwise().sum();
      if (l > 0)
        back = weights_of(model.theta, s).transpose() * back;
    }
  }
  out.loss *= inv_n;
  return out;
}

ModelState sgd_step(ModelState model, const FlatGradient &direction, double lr) {
  if (direction.size() != model.theta.size())
    throw ShapeMismatch("step direction has length " + std::to_string(direction.size()) +
                        ", parameters " + std::to_string(model.theta.size()));
  if (!(lr > 0.0))
    throw ConfigError("learning rate must be positive");
  model.theta -= lr * direction;
  return model;
}

double evaluate(const ModelState &model, const Dataset &data, int task_id) {
  if (data.empty())
    throw EmptyDataset("cannot evaluate on an empty dataset");
  const Eigen::MatrixXd logits = forward_batch(model, data.inputs, task_id);
  Eigen::Index correct = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.rows(); ++c)
      if (logits(c, j) > logits(best, j))
        best = c;
    if (best == data.labels[static_cast<std::size_t>(j)])
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace softgem
