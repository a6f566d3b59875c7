#include "softgem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "softgem/errors.hpp"

namespace softgem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_index(const AccuracyMatrix &R, int t, int i) {
  if (t < 1 || t > R.tasks() || i < 1 || i > R.tasks())
    throw RowUnpopulated("entry (" + std::to_string(t) + ", " + std::to_string(i) +
                         ") outside a " + std::to_string(R.tasks()) + "-task matrix");
}

double entry(const AccuracyMatrix &R, int t, int i) {
  if (!R.populated(t, i))
    throw RowUnpopulated("R(" + std::to_string(t) + ", " + std::to_string(i) + ") is unpopulated");
  return R(t, i);
}

} // namespace

AccuracyMatrix::AccuracyMatrix(int tasks) : values_(Eigen::MatrixXd::Constant(tasks, tasks, kNaN)) {
  if (tasks < 1)
    throw TooFewTasks("accuracy matrix needs at least one task");
}

AccuracyMatrix::AccuracyMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.rows() != values_.cols())
    throw TooFewTasks("accuracy matrix must be square and nonempty");
}

double AccuracyMatrix::operator()(int t, int i) const {
  check_index(*this, t, i);
  return values_(t - 1, i - 1);
}

void AccuracyMatrix::set(int t, int i, double accuracy) {
  check_index(*this, t, i);
  values_(t - 1, i - 1) = accuracy;
}

void AccuracyMatrix::set_row(int t, const Eigen::VectorXd &row) {
  check_index(*this, t, 1);
  if (row.size() != values_.cols())
    throw RowUnpopulated("row length " + std::to_string(row.size()) + " differs from task count");
  values_.row(t - 1) = row.transpose();
}

bool AccuracyMatrix::populated(int t, int i) const {
  check_index(*this, t, i);
  return std::isfinite(values_(t - 1, i - 1));
}

bool AccuracyMatrix::row_populated(int t) const {
  check_index(*this, t, 1);
  return values_.row(t - 1).allFinite();
}

double AccuracyMatrix::first_task_accuracy() const { return entry(*this, tasks(), 1); }
double AccuracyMatrix::last_task_accuracy() const { return entry(*this, tasks(), tasks()); }

double average_accuracy(const AccuracyMatrix &R, int k) {
  if (k < 1 || k > R.tasks())
    throw RowUnpopulated("row " + std::to_string(k) + " does not exist");
  double sum = 0;
  for (int i = 1; i <= k; ++i)
    sum += entry(R, k, i);
  return sum / k;
}

double forgetting(const AccuracyMatrix &R, int k) {
  if (k < 2)
    throw TooFewTasks("forgetting needs k >= 2");
  if (k > R.tasks())
    throw RowUnpopulated("row " + std::to_string(k) + " does not exist");
  double sum = 0;
  for (int i = 1; i < k; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int l = 1; l < k; ++l)
      if (R.populated(l, i))
        best = std::max(best, R(l, i));
    if (!std::isfinite(best))
      throw RowUnpopulated("no accuracy recorded for task " + std::to_string(i) + " before row " +
                           std::to_string(k));
    sum += best - entry(R, k, i);
  }
  return sum / (k - 1);
}

double lca(std::span<const double> curve, int beta) {
  if (beta < 0 || curve.size() < static_cast<std::size_t>(beta) + 1)
    throw CurveTooShort("LCA_" + std::to_string(beta) + " needs " + std::to_string(beta + 1) +
                        " curve points, have " + std::to_string(curve.size()));
  double sum = 0;
  for (int b = 0; b <= beta; ++b)
    sum += curve[static_cast<std::size_t>(b)];
  return sum / (beta + 1);
}

double backward_transfer(const AccuracyMatrix &R) {
  const int T = R.tasks();
  if (T < 2)
    throw TooFewTasks("BWT needs at least two tasks");
  double sum = 0;
  for (int i = 1; i < T; ++i)
    sum += entry(R, T, i) - entry(R, i, i);
  return sum / (T - 1);
}

double forward_transfer(const AccuracyMatrix &R, std::span<const double> baseline) {
  const int T = R.tasks();
  if (T < 2)
    throw TooFewTasks("FWT needs at least two tasks");
  if (baseline.size() != static_cast<std::size_t>(T))
    throw MissingBaseline("need " + std::to_string(T) + " baseline accuracies, have " +
                          std::to_string(baseline.size()));
  double sum = 0;
  for (int i = 2; i <= T; ++i) {
    const double b = baseline[static_cast<std::size_t>(i - 1)];
    if (!std::isfinite(b))
      throw MissingBaseline("baseline for task " + std::to_string(i) + " is missing");
    sum += entry(R, i - 1, i) - b;
  }
  return sum / (T - 1);
}

std::vector<double> average_learning_curve(const std::vector<std::vector<double>> &per_task,
                                           int beta) {
  std::vector<double> out(static_cast<std::size_t>(beta) + 1, 0.0);
  if (per_task.empty())
    return {};
  for (const auto &curve : per_task) {
    if (curve.empty())
      throw CurveTooShort("a task recorded no learning-curve points");
    for (std::size_t b = 0; b < out.size(); ++b)
      out[b] += curve[std::min(b, curve.size() - 1)];
  }
  for (double &z : out)
    z /= static_cast<double>(per_task.size());
  return out;
}

MetricSummary summarize(const AccuracyMatrix &R, std::span<const double> curve,
                        std::span<const double> baseline, int beta) {
  const int T = R.tasks();
  MetricSummary s;
  s.average_accuracy = average_accuracy(R, T);
  s.first_task_accuracy = R.first_task_accuracy();
  s.last_task_accuracy = R.last_task_accuracy();
  s.forgetting = T >= 2 ? forgetting(R, T) : kNaN;
  s.backward_transfer = T >= 2 ? backward_transfer(R) : kNaN;
  s.forward_transfer = T >= 2 ? forward_transfer(R, baseline) : kNaN;
  s.lca = lca(curve, beta);
  return s;
}

} // namespace softgem
