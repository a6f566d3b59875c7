#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace softgem {

// R(t, i) = accuracy on task i after training task t, both 1-based.
// Unpopulated entries hold NaN.
class AccuracyMatrix {
public:
  explicit AccuracyMatrix(int tasks);
  explicit AccuracyMatrix(Eigen::MatrixXd values);

  int tasks() const { return static_cast<int>(values_.rows()); }
  double operator()(int t, int i) const;
  void set(int t, int i, double accuracy);
  void set_row(int t, const Eigen::VectorXd &row);
  bool populated(int t, int i) const;
  bool row_populated(int t) const;
  const Eigen::MatrixXd &values() const { return values_; }

  // a_1 = R(T, 1) and a_t = R(T, T): first and newest task after the run.
  double first_task_accuracy() const;
  double last_task_accuracy() const;

private:
  Eigen::MatrixXd values_;
};

// A_k: mean of R(k, 1..k).
double average_accuracy(const AccuracyMatrix &R, int k);
// F_k: mean over i < k of max_{l < k} R(l, i) - R(k, i).
double forgetting(const AccuracyMatrix &R, int k);
// LCA_beta: mean of the first beta + 1 learning-curve points.
double lca(std::span<const double> curve, int beta);
// BWT: mean over i < T of R(T, i) - R(i, i).
double backward_transfer(const AccuracyMatrix &R);
// FWT: mean over i >= 2 of R(i - 1, i) - b_i, with b_i the accuracy of the
// untrained model on task i.
double forward_transfer(const AccuracyMatrix &R, std::span<const double> baseline);

// Z[b] averaged over tasks; a task with fewer than beta + 1 points repeats
// its last value.
std::vector<double> average_learning_curve(const std::vector<std::vector<double>> &per_task,
                                           int beta);

struct MetricSummary {
  double average_accuracy = 0;   // A_T
  double forgetting = 0;         // F_T
  double first_task_accuracy = 0; // a_1
  double last_task_accuracy = 0;  // a_t
  double backward_transfer = 0;  // BWT
  double forward_transfer = 0;   // FWT
  double lca = 0;                // LCA_beta
};

// Every metric of a finished run. Metrics undefined for a single task
// (F_T, BWT, FWT) are NaN.
MetricSummary summarize(const AccuracyMatrix &R, std::span<const double> curve,
                        std::span<const double> baseline, int beta = 10);

} // namespace softgem
