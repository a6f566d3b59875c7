#include "doctest.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "fixtures.hpp"
#include "softgem/errors.hpp"
#include "softgem/harness.hpp"

using namespace softgem;
using softgem::Method;

namespace {

using Trajectory = std::vector<Eigen::VectorXd>;

Trajectory trajectory(const ExperimentConfig &cfg, std::uint64_t seed, int only_task = 0) {
  Trajectory out;
  train_sequence(cfg, seed, [&](int task, std::int64_t, const ModelState &m) {
    if (only_task == 0 || task == only_task)
      out.push_back(m.theta);
  });
  return out;
}

bool bitwise_equal(const Trajectory &a, const Trajectory &b) {
  if (a.size() != b.size())
    return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].size() != b[k].size() ||
        std::memcmp(a[k].data(), b[k].data(), sizeof(double) * static_cast<std::size_t>(a[k].size())) != 0)
      return false;
  return true;
}

} // namespace

TEST_CASE("single-task VAN") {
  const auto rec = train_sequence(fixture::tiny(Method::VAN, 1), 1);
  CHECK(rec.accuracy.tasks() == 1);
  CHECK(rec.accuracy.row_populated(1));
  CHECK(rec.counts.projections == 0);
  CHECK(rec.counts.constrained == 0);
  CHECK(std::isnan(rec.metrics.forgetting));
  CHECK(rec.metrics.average_accuracy > 0.5);
}

TEST_CASE("accuracy matrix is fully populated, including future tasks") {
  const auto rec = train_sequence(fixture::tiny(Method::AGEM, 3), 2);
  for (int t = 1; t <= 3; ++t)
    CHECK(rec.accuracy.row_populated(t));
  CHECK(rec.baseline.size() == 3);
  CHECK(rec.learning_curve.size() == 11);
  CHECK(rec.task_curves.size() == 3);
  CHECK(rec.wall_clock_seconds.size() == 3);
  CHECK(rec.counts.constrained > 0);
}

TEST_CASE("SOFTGEM on task 1 follows VAN exactly") {
  const auto soft = trajectory(fixture::tiny(Method::SOFTGEM), 3, 1);
  const auto van = trajectory(fixture::tiny(Method::VAN), 3, 1);
  REQUIRE(!soft.empty());
  CHECK(bitwise_equal(soft, van));
}

TEST_CASE("AGEM and SOFTGEM with epsilon 0 share a trajectory") {
  auto soft = fixture::tiny(Method::SOFTGEM);
  soft.epsilon = 0.0;
  const auto a = trajectory(fixture::tiny(Method::AGEM), 4);
  const auto b = trajectory(soft, 4);
  REQUIRE(a.size() > 10);
  CHECK(bitwise_equal(a, b));
  // a positive margin changes the path once memory exists
  soft.epsilon = 0.5;
  CHECK_FALSE(bitwise_equal(a, trajectory(soft, 4)));
}

TEST_CASE("projection counts follow the method") {
  const auto van = train_sequence(fixture::tiny(Method::VAN), 1);
  const auto er = train_sequence(fixture::tiny(Method::ER), 1);
  CHECK(van.counts.projections == 0);
  CHECK(er.counts.projections == 0);
  CHECK(er.counts.constrained > 0);
  for (Method m : {Method::AGEM, Method::SOFTGEM, Method::AAGEM, Method::GEM}) {
    CAPTURE(to_string(m));
    const auto rec = train_sequence(fixture::tiny(m), 1);
    CHECK(rec.counts.projections <= rec.counts.constrained);
    CHECK(rec.counts.steps + rec.counts.zero_updates >= rec.counts.constrained);
  }
  // with epsilon > 0 every constrained step is a violation of the margin
  // unless the gradients already agree beyond it
  const auto soft = train_sequence(fixture::tiny(Method::SOFTGEM), 1);
  CHECK(soft.counts.projections > 0);
}

TEST_CASE("same config and seed give the same bytes") {
  const auto cfg = fixture::tiny(Method::GEM);
  CHECK(serialize_record(train_sequence(cfg, 5)) == serialize_record(train_sequence(cfg, 5)));
  CHECK(serialize_record(train_sequence(cfg, 5)) != serialize_record(train_sequence(cfg, 6)));
}

TEST_CASE("record round trip") {
  const auto rec = train_sequence(fixture::tiny(Method::AAGEM), 2);
  const auto text = serialize_record(rec);
  const auto back = record_from_json(nlohmann::json::parse(text));
  CHECK(serialize_record(back) == text);
  CHECK(back.counts == rec.counts);
  CHECK(back.config_hash == config_hash(fixture::tiny(Method::AAGEM)));

  const auto single = train_sequence(fixture::tiny(Method::VAN, 1), 2);
  const auto again = record_from_json(nlohmann::json::parse(serialize_record(single)));
  CHECK(std::isnan(again.metrics.forgetting));
}

TEST_CASE("suite output layout") {
  const auto dir = fixture::scratch_dir("suite");
  auto a = fixture::tiny(Method::VAN);
  auto b = fixture::tiny(Method::AGEM);
  a.seeds = b.seeds = {1, 2};
  const auto summary = run_suite({a, b}, dir, 2);
  CHECK(summary.records.size() == 4);
  CHECK(summary.rows.size() == 2);
  int files = 0;
  for (const auto &entry : std::filesystem::directory_iterator(dir / "records")) {
    (void)entry;
    ++files;
  }
  CHECK(files == 4);
  CHECK(std::filesystem::exists(dir / "records" / "VAN__seed1.json"));
  CHECK(std::filesystem::exists(dir / "timing" / "AGEM__seed2.json"));

  std::istringstream runs(fixture::read_file(dir / "runs.csv"));
  std::string header;
  std::getline(runs, header);
  CHECK(header == "method,seed,A_T,F_T,a_1,a_t,BWT,FWT,LCA_10");
  std::istringstream agg(fixture::read_file(dir / "aggregate.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(agg, line))
    ++lines;
  CHECK(lines == 3);

  const auto first = fixture::read_file(dir / "aggregate.csv");
  const auto record = fixture::read_file(dir / "records" / "AGEM__seed1.json");
  const auto dir2 = fixture::scratch_dir("suite_serial");
  run_suite({a, b}, dir2, 1);
  CHECK(fixture::read_file(dir2 / "aggregate.csv") == first);
  CHECK(fixture::read_file(dir2 / "aggregate.json") == fixture::read_file(dir / "aggregate.json"));
  CHECK(fixture::read_file(dir2 / "records" / "AGEM__seed1.json") == record);

  CHECK_THROWS_AS(run_suite({a, a}, dir, 1), ConfigError);
}

TEST_CASE("aggregate uses the population standard deviation") {
  RunRecord r1, r2;
  r1.label = r2.label = "X";
  r1.metrics.average_accuracy = 0.5;
  r2.metrics.average_accuracy = 0.7;
  const auto rows = aggregate({r1, r2});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean.average_accuracy == doctest::Approx(0.6));
  CHECK(rows[0].stddev.average_accuracy == doctest::Approx(0.1));
}

TEST_CASE("config JSON is strict and round-trips") {
  const auto cfg = fixture::tiny(Method::SOFTGEM);
  const auto j = config_to_json(cfg);
  const auto back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(config_hash(back) == config_hash(cfg));

  auto reseeded = cfg;
  reseeded.seeds = {9, 10};
  CHECK(config_hash(reseeded) == config_hash(cfg));
  auto other = cfg;
  other.lr = 0.05;
  CHECK(config_hash(other) != config_hash(cfg));

  auto unknown = j;
  unknown["momentum"] = 0.9;
  CHECK_THROWS_AS(config_from_json(unknown), ConfigError);
  auto nested = j;
  nested["stream"]["colour"] = "red";
  CHECK_THROWS_AS(config_from_json(nested), ConfigError);
  auto version = j;
  version["schema_version"] = 2;
  CHECK_THROWS_AS(config_from_json(version), ConfigError);
  auto no_eps = j;
  no_eps.erase("epsilon");
  CHECK_THROWS_AS(config_from_json(no_eps).validate(), ConfigError);
  auto van_eps = j;
  van_eps["method"] = "VAN";
  CHECK_THROWS_AS(config_from_json(van_eps).validate(), ConfigError);
  auto bad_eps = j;
  bad_eps["epsilon"] = 1.5;
  CHECK_THROWS(config_from_json(bad_eps).validate());
  auto wrong_type = j;
  wrong_type["lr"] = "fast";
  CHECK_THROWS_AS(config_from_json(wrong_type), ConfigError);
}

TEST_CASE("cross-validation phase trains the leading tasks") {
  auto cfg = fixture::tiny(Method::SOFTGEM, 4);
  cfg.stream.cv_tasks = 1;
  const auto eval = train_sequence(cfg, 1);
  CHECK(eval.accuracy.tasks() == 3);
  cfg.phase = Phase::CrossValidation;
  const auto cv = train_sequence(cfg, 1);
  CHECK(cv.accuracy.tasks() == 1);

  cfg.stream.cv_tasks = 2;
  cfg.seeds = {1, 2};
  const auto score = score_epsilon(cfg, 0.2, 2);
  CHECK(score.accuracy_mean > 0.0);
  CHECK(score.accuracy_mean <= 1.0);
  CHECK(score.accuracy_std >= 0.0);
}
