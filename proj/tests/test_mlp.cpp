#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "softgem/errors.hpp"
#include "softgem/mlp.hpp"

using namespace softgem;
using Eigen::VectorXd;

namespace {

// Forward pass written with plain loops over the documented flat layout.
VectorXd reference_forward(const ModelState &m, const VectorXd &x, int task) {
  const auto &a = m.arch;
  std::size_t off = 0;
  std::vector<double> act(x.data(), x.data() + x.size());
  auto layer = [&](std::size_t in, std::size_t out, bool relu) {
    std::vector<double> next(out, 0.0);
    const std::size_t bias = off + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      double z = m.theta(static_cast<Eigen::Index>(bias + o));
      for (std::size_t i = 0; i < in; ++i)
        z += m.theta(static_cast<Eigen::Index>(off + i * out + o)) * act[i];
      next[o] = relu ? std::max(z, 0.0) : z;
    }
    off += (in + 1) * out;
    act = next;
  };
  std::size_t in = static_cast<std::size_t>(a.input_dim);
  for (int w : a.hidden_dims) {
    layer(in, static_cast<std::size_t>(w), true);
    in = static_cast<std::size_t>(w);
  }
  off += static_cast<std::size_t>(task - 1) * (in + 1) * static_cast<std::size_t>(a.classes_per_head);
  layer(in, static_cast<std::size_t>(a.classes_per_head), false);
  return Eigen::Map<VectorXd>(act.data(), static_cast<Eigen::Index>(act.size()));
}

Batch random_batch(std::mt19937_64 &rng, const MlpArchitecture &arch, int n) {
  Batch b;
  b.inputs = Eigen::MatrixXd(arch.input_dim, n);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> task(1, arch.heads), label(0, arch.classes_per_head - 1);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < arch.input_dim; ++i)
      b.inputs(i, j) = normal(rng);
    b.task_ids.push_back(task(rng));
    b.labels.push_back(label(rng));
  }
  return b;
}

ModelState randomized(const MlpArchitecture &arch, std::uint64_t seed) {
  ModelState m = init_model(arch, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.1);
  for (Eigen::Index i = 0; i < m.theta.size(); ++i)
    if (m.theta(i) == 0.0)
      m.theta(i) = n(rng); // nonzero biases exercise every path
  return m;
}

} // namespace

TEST_CASE("parameter counts") {
  MlpArchitecture a{4, {8}, 2, 3};
  CHECK(a.parameter_count() == 94);
  CHECK(init_model(a, 1).theta.size() == 94);
  MlpArchitecture linear{5, {}, 3, 4};
  CHECK(linear.parameter_count() == 3 * (5 * 4 + 4));
  CHECK_THROWS_AS(init_model(MlpArchitecture{0, {}, 1, 2}, 1), InvalidArchitecture);
  CHECK_THROWS_AS(init_model(MlpArchitecture{3, {0}, 1, 2}, 1), InvalidArchitecture);
}

TEST_CASE("init is deterministic, bounded, with zero biases") {
  MlpArchitecture a{6, {5, 4}, 2, 3};
  const auto m1 = init_model(a, 77);
  const auto m2 = init_model(a, 77);
  CHECK(m1.theta == m2.theta);
  CHECK(init_model(a, 78).theta != m1.theta);
  // first layer: 6 -> 5, bound sqrt(6 / 11); biases follow the 30 weights
  const double bound = std::sqrt(6.0 / 11.0);
  CHECK(m1.theta.head(30).cwiseAbs().maxCoeff() <= bound);
  CHECK(m1.theta.segment(30, 5).isZero(0));
}

TEST_CASE("forward") {
  MlpArchitecture a{4, {8}, 2, 3};
  ModelState zero{a, VectorXd::Zero(a.parameter_count()), 0};
  const VectorXd x = VectorXd::LinSpaced(4, -1, 2);
  CHECK(forward(zero, x, 1).isZero(0));

  const ModelState m = randomized(a, 3);
  CHECK(forward(m, x, 1).size() == 3);
  CHECK((forward(m, x, 1) - forward(m, x, 2)).norm() > 1e-6);
  CHECK_THROWS_AS(forward(m, x, 0), UnknownTask);
  CHECK_THROWS_AS(forward(m, x, 3), UnknownTask);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd xi = oracle::random_vector(rng, 4);
    for (int t = 1; t <= 2; ++t)
      CHECK((forward(m, xi, t) - reference_forward(m, xi, t)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("loss of equal logits is ln 2") {
  MlpArchitecture a{3, {}, 1, 2};
  ModelState zero{a, VectorXd::Zero(a.parameter_count()), 0};
  Batch b;
  b.inputs = Eigen::MatrixXd::Ones(3, 2);
  b.task_ids = {1, 1};
  b.labels = {0, 1};
  CHECK(loss_and_grad(zero, b).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(loss_and_grad(zero, Batch{}), EmptyBatch);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> depth(0, 3), width(1, 7), heads(1, 3), classes(2, 4);
    MlpArchitecture a;
    a.input_dim = width(rng);
    for (int l = depth(rng); l > 0; --l)
      a.hidden_dims.push_back(width(rng));
    a.heads = heads(rng);
    a.classes_per_head = classes(rng);
    const ModelState m = randomized(a, 100 + static_cast<std::uint64_t>(trial));
    const Batch b = random_batch(rng, a, 6);
    const auto lg = loss_and_grad(m, b);
    std::uniform_int_distribution<Eigen::Index> coord(0, m.theta.size() - 1);
    for (int k = 0; k < 100; ++k) {
      const Eigen::Index i = coord(rng);
      ModelState plus = m, minus = m;
      plus.theta(i) += 1e-5;
      minus.theta(i) -= 1e-5;
      const double fd = (loss_and_grad(plus, b).loss - loss_and_grad(minus, b).loss) / 2e-5;
      CHECK(std::abs(lg.grad(i) - fd) / (1 + std::abs(lg.grad(i))) < 1e-6);
    }
  }
}

TEST_CASE("single-task batches leave other heads untouched") {
  MlpArchitecture a{4, {5}, 3, 2};
  const ModelState m = randomized(a, 9);
  std::mt19937_64 rng(10);
  Batch b = random_batch(rng, a, 8);
  std::fill(b.task_ids.begin(), b.task_ids.end(), 2);
  const auto g = loss_and_grad(m, b).grad;
  const Eigen::Index trunk = (4 + 1) * 5;
  const Eigen::Index head = (5 + 1) * 2;
  CHECK(g.segment(trunk, head).isZero(0));
  CHECK_FALSE(g.segment(trunk + head, head).isZero(0));
  CHECK(g.segment(trunk + 2 * head, head).isZero(0));
}

TEST_CASE("duplicating a batch keeps the mean loss and gradient") {
  MlpArchitecture a{3, {4}, 2, 3};
  const ModelState m = randomized(a, 11);
  std::mt19937_64 rng(12);
  const Batch b = random_batch(rng, a, 5);
  const auto once = loss_and_grad(m, b);
  const auto twice = loss_and_grad(m, b.concat(b));
  CHECK(std::abs(once.loss - twice.loss) < 1e-14);
  CHECK((once.grad - twice.grad).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("softmax gradient with respect to logits sums to zero") {
  // With no hidden layers the head-bias gradient equals the mean dL/dlogits.
  MlpArchitecture a{3, {}, 1, 4};
  ModelState m = randomized(a, 13);
  std::mt19937_64 rng(14);
  const Batch b = random_batch(rng, a, 7);
  const auto g = loss_and_grad(m, b).grad;
  CHECK(std::abs(g.tail(4).sum()) < 1e-12);
  // shifting every logit by a constant changes nothing
  const auto before = loss_and_grad(m, b);
  m.theta.tail(4).array() += 3.5;
  const auto after = loss_and_grad(m, b);
  CHECK(std::abs(before.loss - after.loss) < 1e-12);
  CHECK((before.grad - after.grad).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sgd_step") {
  MlpArchitecture a{1, {}, 1, 1};
  ModelState m{a, VectorXd(2), 0};
  m.theta << 1, 1;
  VectorXd g(2);
  g << 1, -1;
  const auto stepped = sgd_step(m, g, 0.5);
  CHECK(stepped.theta(0) == 0.5);
  CHECK(stepped.theta(1) == 1.5);
  CHECK(sgd_step(m, VectorXd::Zero(2), 0.1).theta == m.theta);
  CHECK_THROWS_AS(sgd_step(m, VectorXd::Zero(3), 0.1), ShapeMismatch);

  VectorXd h(2);
  h << 0.25, 0.5;
  const auto two = sgd_step(sgd_step(m, g, 0.5), h, 0.5);
  const auto one = sgd_step(m, VectorXd(g + h), 0.5);
  CHECK((two.theta - one.theta).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("evaluate") {
  MlpArchitecture a{2, {}, 1, 3};
  ModelState m{a, VectorXd::Zero(a.parameter_count()), 0};
  Dataset d;
  d.num_classes = 3;
  d.inputs = Eigen::MatrixXd::Random(2, 6);
  d.labels = {0, 0, 0, 0, 0, 0};
  // all logits tie -> prediction is class 0
  CHECK(evaluate(m, d, 1) == 1.0);
  d.labels = {0, 1, 2, 0, 1, 2};
  CHECK(evaluate(m, d, 1) == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(evaluate(m, Dataset{}, 1), EmptyDataset);

  Dataset one;
  one.num_classes = 3;
  one.inputs = Eigen::MatrixXd::Zero(2, 1);
  one.labels = {0};
  CHECK(evaluate(m, one, 1) == 1.0);
}

TEST_CASE("untrained head scores near chance on random labels") {
  MlpArchitecture a{5, {16}, 1, 4};
  const ModelState m = init_model(a, 21);
  std::mt19937_64 rng(22);
  const int n = 20000;
  Dataset d;
  d.num_classes = 4;
  d.inputs = Eigen::MatrixXd(5, n);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> label(0, 3);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < 5; ++i)
      d.inputs(i, j) = normal(rng);
    d.labels.push_back(label(rng));
  }
  const double p = 0.25;
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(evaluate(m, d, 1) - p) < 4 * sigma);
}
