#include "softgem/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "softgem/episodic_memory.hpp"
#include "softgem/errors.hpp"
#include "softgem/gradient_rules.hpp"
#include "softgem/idx.hpp"
#include "softgem/random.hpp"

namespace softgem {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

TrainTest build_base(const ExperimentConfig &cfg) {
  const DataSource &src = cfg.source;
  if (src.type == DataSource::Type::Idx) {
    TrainTest base{load_idx_dataset(src.train_images, src.train_labels),
                   load_idx_dataset(src.test_images, src.test_labels)};
    const int classes = std::max(base.train.num_classes, base.test.num_classes);
    base.train.num_classes = base.test.num_classes = classes;
    return base;
  }
  const Dataset pool = make_synthetic_base(src.classes, src.dim, src.per_class, cfg.stream.seed, src.sigma);
  return train_test_split(pool, src.test_fraction, cfg.stream.seed);
}

std::vector<TaskDataset> build_tasks(const ExperimentConfig &cfg, const TrainTest &base,
                                     std::uint64_t seed) {
  StreamConfig stream = cfg.stream;
  stream.seed = mix64(cfg.stream.seed ^ mix64(seed ^ fnv1a("tasks")));
  auto split = split_cv_eval(make_stream(base, stream), stream.cv_tasks);
  return cfg.phase == Phase::Eval ? std::move(split.eval) : std::move(split.cv);
}

namespace {

// Holds the mutable state of one run of the training loop.
class SequenceTrainer {
public:
  SequenceTrainer(const ExperimentConfig &cfg, std::uint64_t seed, std::vector<TaskDataset> tasks,
                  const StepObserver &observer)
      : cfg_(cfg), seed_(seed), tasks_(std::move(tasks)), observer_(observer),
        shuffle_rng_(named_stream(seed, "shuffle")), memory_rng_(named_stream(seed, "memory")) {}

  RunRecord run() {
    if (tasks_.empty())
      throw ConfigError("the selected phase has no tasks");
    MlpArchitecture arch;
    arch.input_dim = static_cast<int>(tasks_.front().train.dim());
    arch.hidden_dims = cfg_.hidden_dims;
    arch.heads = static_cast<int>(tasks_.size());
    for (const auto &t : tasks_)
      arch.classes_per_head = std::max({arch.classes_per_head, t.train.num_classes, t.test.num_classes});
    model_ = init_model(arch, mix64(seed_ ^ fnv1a("init")));

    const int T = arch.heads;
    RunRecord rec;
    rec.config_hash = config_hash(cfg_);
    rec.label = cfg_.label();
    rec.config = config_to_json(cfg_);
    rec.config.erase("seeds");
    rec.seed = seed_;
    rec.accuracy = AccuracyMatrix(T);
    for (int i = 1; i <= T; ++i)
      rec.baseline.push_back(evaluate(model_, test_of(i), i));

    if (uses_memory(cfg_.method))
      memory_.emplace(cfg_.mem_per_class, arch.classes_per_head);

    for (int t = 1; t <= T; ++t) {
      const auto start = std::chrono::steady_clock::now();
      rec.task_curves.push_back(train_task(t));
      Eigen::VectorXd row(T);
      for (int i = 1; i <= T; ++i)
        row(i - 1) = evaluate(model_, test_of(i), i);
      rec.accuracy.set_row(t, row);
      rec.wall_clock_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    rec.learning_curve = average_learning_curve(rec.task_curves, cfg_.lca_beta);
    rec.counts = counts_;
    rec.metrics = summarize(rec.accuracy, rec.learning_curve, rec.baseline, cfg_.lca_beta);
    return rec;
  }

private:
  const Dataset &test_of(int task) const { return tasks_[static_cast<std::size_t>(task - 1)].test; }

  std::vector<double> train_task(int t) {
    const Dataset &train = tasks_[static_cast<std::size_t>(t - 1)].train;
    const Dataset &test = test_of(t);
    std::vector<double> curve{evaluate(model_, test, t)};
    std::int64_t batches_seen = 0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));

    for (int epoch = 0; epoch < cfg_.epochs_per_task; ++epoch) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::shuffle(order.begin(), order.end(), shuffle_rng_);
      for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg_.batch_size)) {
        const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg_.batch_size));
        const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(first),
                                            order.begin() + static_cast<std::ptrdiff_t>(last));
        step(Batch::from_dataset(train, idx, t), t);
        ++batches_seen;
        if (batches_seen <= cfg_.lca_beta)
          curve.push_back(evaluate(model_, test, t));
        if (observer_)
          observer_(t, counts_.steps, model_);
      }
    }
    if (memory_)
      memory_->add_task(select(train, order), t);
    return curve;
  }

  bool memory_ready(int t) const { return memory_ && memory_->available_before(t) > 0; }

  void step(Batch batch, int t) {
    FlatGradient direction;
    switch (cfg_.method) {
    case Method::VAN:
      direction = loss_and_grad(model_, batch).grad;
      break;
    case Method::ER:
      if (memory_ready(t)) {
        const auto replay = sample_reference_batch(*memory_, t, cfg_.batch_size, memory_rng_);
        batch = batch.concat(make_batch(replay));
        ++counts_.constrained;
      }
      direction = loss_and_grad(model_, batch).grad;
      break;
    case Method::GEM:
      direction = gem_direction(batch, t);
      break;
    case Method::AGEM:
    case Method::AAGEM:
    case Method::SOFTGEM:
      direction = averaged_direction(batch, t);
      break;
    }
    if (direction.size() == 0)
      return; // skipped step
    model_ = sgd_step(std::move(model_), direction, cfg_.lr);
    ++counts_.steps;
  }

  FlatGradient apply(const Update<double> &u) {
    if (u.status == RuleStatus::ZeroUpdate) {
      ++counts_.zero_updates;
      ++counts_.projections;
      return {};
    }
    if (u.projected())
      ++counts_.projections;
    return u.direction;
  }

  FlatGradient averaged_direction(const Batch &batch, int t) {
    if (!memory_ready(t))
      return loss_and_grad(model_, batch).grad;
    const auto ref_slots = sample_reference_batch(*memory_, t, cfg_.ref_batch_size, memory_rng_);
    const FlatGradient g_ref = loss_and_grad(model_, make_batch(ref_slots)).grad;
    FlatGradient g = loss_and_grad(model_, batch).grad;
    ++counts_.constrained;
    try {
      switch (cfg_.method) {
      case Method::AGEM:
        return apply(agem_project(g, g_ref));
      case Method::AAGEM:
        return apply(aagem_update(g, g_ref));
      default:
        return apply(soft_gem_update(g, g_ref, SoftConstraint(*cfg_.epsilon)));
      }
    } catch (const ZeroGradient &) {
      ++counts_.degenerate;
      return g;
    }
  }

  FlatGradient gem_direction(const Batch &batch, int t) {
    if (!memory_ready(t))
      return loss_and_grad(model_, batch).grad;
    const auto per_task = per_task_batches(*memory_, t, cfg_.ref_batch_size, memory_rng_);
    std::vector<FlatGradient> refs;
    for (const auto &[task, slots] : per_task)
      refs.push_back(loss_and_grad(model_, make_batch(slots)).grad);
    FlatGradient g = loss_and_grad(model_, batch).grad;
    ++counts_.constrained;
    return apply(gem_project(g, ConstraintSet<double>(refs)));
  }

  const ExperimentConfig &cfg_;
  std::uint64_t seed_;
  std::vector<TaskDataset> tasks_;
  const StepObserver &observer_;
  Rng shuffle_rng_;
  Rng memory_rng_;
  ModelState model_;
  std::optional<EpisodicMemory> memory_;
  StepCounts counts_;
};

} // namespace

RunRecord train_sequence(const ExperimentConfig &cfg, std::uint64_t seed, const StepObserver &observer) {
  cfg.validate();
  const TrainTest base = build_base(cfg);
  return SequenceTrainer(cfg, seed, build_tasks(cfg, base, seed), observer).run();
}

// --- record serialization -------------------------------------------------

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json &j) { return j.is_null() ? kNaN : j.get<double>(); }

json metrics_to_json(const MetricSummary &m) {
  return {{"A_T", number_or_null(m.average_accuracy)},
          {"F_T", number_or_null(m.forgetting)},
          {"a_1", number_or_null(m.first_task_accuracy)},
          {"a_t", number_or_null(m.last_task_accuracy)},
          {"BWT", number_or_null(m.backward_transfer)},
          {"FWT", number_or_null(m.forward_transfer)},
          {"LCA_10", number_or_null(m.lca)}};
}

MetricSummary metrics_from_json(const json &j) {
  MetricSummary m;
  m.average_accuracy = number_from(j.at("A_T"));
  m.forgetting = number_from(j.at("F_T"));
  m.first_task_accuracy = number_from(j.at("a_1"));
  m.last_task_accuracy = number_from(j.at("a_t"));
  m.backward_transfer = number_from(j.at("BWT"));
  m.forward_transfer = number_from(j.at("FWT"));
  m.lca = number_from(j.at("LCA_10"));
  return m;
}

std::vector<double> vector_from(const json &j) {
  std::vector<double> out;
  for (const auto &x : j)
    out.push_back(number_from(x));
  return out;
}

} // namespace

json record_to_json(const RunRecord &r) {
  json matrix = json::array();
  const auto &R = r.accuracy.values();
  for (Eigen::Index t = 0; t < R.rows(); ++t) {
    json row = json::array();
    for (Eigen::Index i = 0; i < R.cols(); ++i)
      row.push_back(number_or_null(R(t, i)));
    matrix.push_back(row);
  }
  json j;
  j["record_version"] = kRecordVersion;
  j["config_hash"] = r.config_hash;
  j["label"] = r.label;
  j["config"] = r.config;
  j["seed"] = r.seed;
  j["accuracy_matrix"] = matrix;
  j["baseline"] = r.baseline;
  j["learning_curve"] = r.learning_curve;
  j["task_curves"] = r.task_curves;
  j["counts"] = {{"steps", r.counts.steps},
                 {"constrained", r.counts.constrained},
                 {"projections", r.counts.projections},
                 {"zero_updates", r.counts.zero_updates},
                 {"degenerate", r.counts.degenerate}};
  j["metrics"] = metrics_to_json(r.metrics);
  return j;
}

RunRecord record_from_json(const json &j) {
  try {
    if (j.at("record_version").get<int>() != kRecordVersion)
      throw ConfigError("unsupported record_version");
    RunRecord r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.config = j.at("config");
    r.seed = j.at("seed").get<std::uint64_t>();
    const auto &m = j.at("accuracy_matrix");
    const auto T = static_cast<Eigen::Index>(m.size());
    Eigen::MatrixXd R(T, T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto &row = m.at(static_cast<std::size_t>(t));
      if (static_cast<Eigen::Index>(row.size()) != T)
        throw ConfigError("accuracy_matrix is not square");
      for (Eigen::Index i = 0; i < T; ++i)
        R(t, i) = number_from(row.at(static_cast<std::size_t>(i)));
    }
    r.accuracy = AccuracyMatrix(R);
    r.baseline = vector_from(j.at("baseline"));
    r.learning_curve = vector_from(j.at("learning_curve"));
    for (const auto &c : j.at("task_curves"))
      r.task_curves.push_back(vector_from(c));
    const auto &c = j.at("counts");
    r.counts = {c.at("steps").get<std::int64_t>(), c.at("constrained").get<std::int64_t>(),
                c.at("projections").get<std::int64_t>(), c.at("zero_updates").get<std::int64_t>(),
                c.at("degenerate").get<std::int64_t>()};
    r.metrics = metrics_from_json(j.at("metrics"));
    return r;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("malformed run record: ") + e.what());
  }
}

std::string serialize_record(const RunRecord &record) { return record_to_json(record).dump(2) + "\n"; }

RunRecord load_record(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open run record " + path.string());
  try {
    return record_from_json(json::parse(in));
  } catch (const json::parse_error &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// --- aggregation ----------------------------------------------------------

namespace {

using Field = double MetricSummary::*;
constexpr Field kFields[] = {&MetricSummary::average_accuracy,    &MetricSummary::forgetting,
                             &MetricSummary::first_task_accuracy, &MetricSummary::last_task_accuracy,
                             &MetricSummary::backward_transfer,   &MetricSummary::forward_transfer,
                             &MetricSummary::lca};
constexpr const char *kFieldNames[] = {"A_T", "F_T", "a_1", "a_t", "BWT", "FWT", "LCA_10"};

void put_number(std::ostream &out, double v) {
  if (std::isfinite(v))
    out << v;
  else
    out << "nan";
}

} // namespace

std::vector<AggregateRow> aggregate(const std::vector<RunRecord> &records) {
  std::vector<AggregateRow> rows;
  std::map<std::string, std::vector<const RunRecord *>> groups;
  for (const auto &r : records) {
    if (!groups.contains(r.label))
      rows.push_back({r.label, 0, {}, {}});
    groups[r.label].push_back(&r);
  }
  for (auto &row : rows) {
    const auto &members = groups[row.label];
    row.runs = static_cast<int>(members.size());
    for (Field f : kFields) {
      double sum = 0;
      for (const auto *r : members)
        sum += r->metrics.*f;
      const double mean = sum / row.runs;
      double sq = 0;
      for (const auto *r : members)
        sq += (r->metrics.*f - mean) * (r->metrics.*f - mean);
      row.mean.*f = mean;
      row.stddev.*f = std::sqrt(sq / row.runs);
    }
  }
  return rows;
}

void write_runs_csv(std::ostream &out, const std::vector<RunRecord> &records) {
  out << "method,seed";
  for (const char *name : kFieldNames)
    out << ',' << name;
  out << '\n' << std::setprecision(10);
  for (const auto &r : records) {
    out << r.label << ',' << r.seed;
    for (Field f : kFields) {
      out << ',';
      put_number(out, r.metrics.*f);
    }
    out << '\n';
  }
}

void write_aggregate_csv(std::ostream &out, const std::vector<AggregateRow> &rows) {
  out << "method,runs";
  for (const char *name : kFieldNames)
    out << ',' << name << "_mean," << name << "_std";
  out << '\n' << std::setprecision(10);
  for (const auto &row : rows) {
    out << row.label << ',' << row.runs;
    for (Field f : kFields) {
      out << ',';
      put_number(out, row.mean.*f);
      out << ',';
      put_number(out, row.stddev.*f);
    }
    out << '\n';
  }
}

json aggregate_to_json(const std::vector<AggregateRow> &rows) {
  json out = json::array();
  for (const auto &row : rows)
    out.push_back({{"method", row.label},
                   {"runs", row.runs},
                   {"mean", metrics_to_json(row.mean)},
                   {"std", metrics_to_json(row.stddev)}});
  return out;
}

// --- suites ---------------------------------------------------------------

void parallel_for(int count, int jobs, const std::function<void(int)> &fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = std::current_exception();
        }
      }
    });
  for (auto &w : workers)
    w.join();
  if (error)
    std::rethrow_exception(error);
}

namespace {

std::string file_stem(const std::string &label, std::uint64_t seed) {
  std::string stem;
  for (char c : label)
    stem += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return stem + "__seed" + std::to_string(seed);
}

void write_file(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << text;
  if (!out)
    throw IoError("failed writing " + path.string());
}

} // namespace

SuiteSummary run_suite(const std::vector<ExperimentConfig> &configs,
                       const std::filesystem::path &output_dir, int jobs) {
  std::set<std::string> labels;
  std::vector<std::pair<const ExperimentConfig *, std::uint64_t>> runs;
  for (const auto &cfg : configs) {
    cfg.validate();
    if (!labels.insert(cfg.label()).second)
      throw ConfigError("two configs share the name '" + cfg.label() + "'");
    for (auto seed : cfg.seeds)
      runs.emplace_back(&cfg, seed);
  }

  std::error_code ec;
  std::filesystem::create_directories(output_dir / "records", ec);
  std::filesystem::create_directories(output_dir / "timing", ec);
  if (ec)
    throw IoError("cannot create " + output_dir.string() + ": " + ec.message());

  SuiteSummary summary;
  summary.records.resize(runs.size());
  summary.record_files.resize(runs.size());
  parallel_for(static_cast<int>(runs.size()), jobs, [&](int k) {
    const auto &[cfg, seed] = runs[static_cast<std::size_t>(k)];
    RunRecord rec = train_sequence(*cfg, seed);
    const std::string stem = file_stem(rec.label, seed) + ".json";
    const auto path = output_dir / "records" / stem;
    write_file(path, serialize_record(rec));
    json timing = {{"label", rec.label}, {"seed", seed}, {"wall_clock_seconds", rec.wall_clock_seconds}};
    write_file(output_dir / "timing" / stem, timing.dump(2) + "\n");
    summary.records[static_cast<std::size_t>(k)] = std::move(rec);
    summary.record_files[static_cast<std::size_t>(k)] = path;
  });

  summary.rows = aggregate(summary.records);
  std::ostringstream runs_csv, agg_csv;
  write_runs_csv(runs_csv, summary.records);
  write_aggregate_csv(agg_csv, summary.rows);
  write_file(output_dir / "runs.csv", runs_csv.str());
  write_file(output_dir / "aggregate.csv", agg_csv.str());
  write_file(output_dir / "aggregate.json", aggregate_to_json(summary.rows).dump(2) + "\n");
  return summary;
}

EpsilonScore score_epsilon(const ExperimentConfig &base_cfg, double epsilon, int jobs) {
  ExperimentConfig cfg = base_cfg;
  cfg.method = Method::SOFTGEM;
  cfg.epsilon = epsilon;
  cfg.name.clear();
  if (cfg.stream.cv_tasks > 0)
    cfg.phase = Phase::CrossValidation;
  std::vector<MetricSummary> results(cfg.seeds.size());
  parallel_for(static_cast<int>(cfg.seeds.size()), jobs, [&](int k) {
    results[static_cast<std::size_t>(k)] = train_sequence(cfg, cfg.seeds[static_cast<std::size_t>(k)]).metrics;
  });
  EpsilonScore score;
  const double n = static_cast<double>(results.size());
  for (const auto &m : results) {
    score.accuracy_mean += m.average_accuracy / n;
    score.forgetting_mean += m.forgetting / n;
  }
  double sq = 0;
  for (const auto &m : results)
    sq += (m.average_accuracy - score.accuracy_mean) * (m.average_accuracy - score.accuracy_mean);
  score.accuracy_std = std::sqrt(sq / n);
  return score;
}

} // namespace softgem
