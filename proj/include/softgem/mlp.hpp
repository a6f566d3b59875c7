#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "softgem/dataset.hpp"
#include "softgem/gradient_rules.hpp"

namespace softgem {

// Fully connected ReLU trunk shared by all tasks, followed by one linear
// head per task.
struct MlpArchitecture {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int heads = 1;
  int classes_per_head = 2;

  Eigen::Index parameter_count() const;
  void validate() const;

  bool operator==(const MlpArchitecture &) const = default;
};

// Parameters live in one flat vector so gradients can be compared, projected
// and stepped without knowing the layer structure. Layout: for each hidden
// layer W (out x in, column-major) then b; then for each head W then b.
struct ModelState {
  MlpArchitecture arch;
  Eigen::VectorXd theta;
  std::uint64_t rng_seed = 0;
};

// Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)), zero biases.
ModelState init_model(const MlpArchitecture &arch, std::uint64_t seed);

Eigen::VectorXd forward(const ModelState &model, const Eigen::VectorXd &x, int task_id);
// Logits for every column of `inputs`, one column per sample.
Eigen::MatrixXd forward_batch(const ModelState &model, const Eigen::MatrixXd &inputs, int task_id);

struct LossAndGradient {
  double loss = 0.0;
  FlatGradient grad;
};

// Mean cross-entropy over the batch and its exact gradient. Samples are
// scored on the head of their own task id.
LossAndGradient loss_and_grad(const ModelState &model, const Batch &batch);

// theta' = theta - lr * direction
ModelState sgd_step(ModelState model, const FlatGradient &direction, double lr);

// Fraction of argmax-correct predictions; ties go to the lowest class index.
double evaluate(const ModelState &model, const Dataset &data, int task_id);

} // namespace softgem
