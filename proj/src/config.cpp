#include "softgem/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "softgem/errors.hpp"
#include "softgem/gradient_rules.hpp"
#include "softgem/random.hpp"

namespace softgem {

using nlohmann::json;

std::string to_string(Method method) {
  switch (method) {
  case Method::VAN:
    return "VAN";
  case Method::ER:
    return "ER";
  case Method::GEM:
    return "GEM";
  case Method::AGEM:
    return "AGEM";
  case Method::AAGEM:
    return "AAGEM";
  case Method::SOFTGEM:
    return "SOFTGEM";
  }
  return "unknown";
}

Method parse_method(const std::string &text) {
  for (Method m : {Method::VAN, Method::ER, Method::GEM, Method::AGEM, Method::AAGEM, Method::SOFTGEM})
    if (to_string(m) == text)
      return m;
  throw ConfigError("unknown method '" + text + "' (expected VAN, ER, GEM, AGEM, AAGEM or SOFTGEM)");
}

bool uses_memory(Method method) { return method != Method::VAN; }

void ExperimentConfig::validate() const {
  if (epsilon.has_value() != (method == Method::SOFTGEM))
    throw ConfigError("epsilon must be given exactly when method is SOFTGEM");
  if (epsilon)
    SoftConstraint check(*epsilon);
  stream.validate();
  for (int w : hidden_dims)
    if (w < 1)
      throw ConfigError("hidden layer widths must be >= 1");
  if (!(lr > 0))
    throw ConfigError("lr must be positive");
  if (batch_size < 1 || ref_batch_size < 1)
    throw ConfigError("batch sizes must be >= 1");
  if (uses_memory(method) && mem_per_class < 1)
    throw BudgetZero("mem_per_class must be >= 1 for memory methods");
  if (seeds.empty())
    throw ConfigError("at least one seed is required");
  if (epochs_per_task < 1)
    throw ConfigError("epochs_per_task must be >= 1");
  if (lca_beta < 0)
    throw ConfigError("lca_beta must be >= 0");
  if (phase == Phase::CrossValidation && stream.cv_tasks < 1)
    throw ConfigError("phase 'cv' needs cv_tasks >= 1");
  if (source.type == DataSource::Type::Synthetic) {
    if (source.classes < 2 || source.dim < 1 || source.per_class < 1)
      throw ConfigError("synthetic source needs classes >= 2, dim >= 1, per_class >= 1");
    if (!(source.test_fraction > 0 && source.test_fraction < 1))
      throw ConfigError("test_fraction must lie in (0, 1)");
  }
}

std::string ExperimentConfig::label() const {
  if (!name.empty())
    return name;
  if (method == Method::SOFTGEM && epsilon) {
    std::ostringstream os;
    os << "SOFTGEM(eps=" << *epsilon << ")";
    return os.str();
  }
  return to_string(method);
}

namespace {

// Reads keys from one JSON object and rejects any key it was never asked for.
class ObjectReader {
public:
  ObjectReader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object())
      throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string &key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <typename T> T get(const std::string &key) {
    if (!has(key))
      throw ConfigError(where_ + ": missing key '" + key + "'");
    return convert<T>(key);
  }

  template <typename T> T get(const std::string &key, T fallback) {
    return has(key) ? convert<T>(key) : fallback;
  }

  const json &raw(const std::string &key) {
    if (!has(key))
      throw ConfigError(where_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  void finish() const {
    for (const auto &[key, _] : j_.items())
      if (!seen_.contains(key))
        throw ConfigError(where_ + ": unknown key '" + key + "'");
  }

private:
  template <typename T> T convert(const std::string &key) {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception &e) {
      throw ConfigError(where_ + ": bad value for '" + key + "': " + e.what());
    }
  }

  const json &j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path &p, const std::filesystem::path &base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

} // namespace

ExperimentConfig config_from_json(const json &j, const std::filesystem::path &base_dir) {
  ObjectReader top(j, "config");
  const int version = top.get<int>("schema_version");
  if (version != kConfigSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(version));

  ExperimentConfig cfg;
  cfg.name = top.get<std::string>("name", "");
  cfg.method = parse_method(top.get<std::string>("method"));
  if (top.has("epsilon"))
    cfg.epsilon = top.get<double>("epsilon");
  cfg.lr = top.get<double>("lr", cfg.lr);
  cfg.batch_size = top.get<int>("batch_size", cfg.batch_size);
  cfg.mem_per_class = top.get<int>("mem_per_class", cfg.mem_per_class);
  cfg.ref_batch_size = top.get<int>("ref_batch_size", cfg.ref_batch_size);
  cfg.seeds = top.get<std::vector<std::uint64_t>>("seeds", cfg.seeds);
  cfg.epochs_per_task = top.get<int>("epochs_per_task", cfg.epochs_per_task);
  cfg.lca_beta = top.get<int>("lca_beta", cfg.lca_beta);
  const auto phase = top.get<std::string>("phase", "eval");
  if (phase == "eval")
    cfg.phase = Phase::Eval;
  else if (phase == "cv")
    cfg.phase = Phase::CrossValidation;
  else
    throw ConfigError("phase must be 'eval' or 'cv', got '" + phase + "'");

  if (top.has("arch")) {
    ObjectReader arch(top.raw("arch"), "arch");
    cfg.hidden_dims = arch.get<std::vector<int>>("hidden_dims", cfg.hidden_dims);
    arch.finish();
  }

  ObjectReader stream(top.raw("stream"), "stream");
  cfg.stream.kind = parse_stream_kind(stream.get<std::string>("kind"));
  cfg.stream.total_tasks = stream.get<int>("total_tasks");
  cfg.stream.cv_tasks = stream.get<int>("cv_tasks", 0);
  cfg.stream.classes_per_task = stream.get<int>("classes_per_task", cfg.stream.classes_per_task);
  cfg.stream.seed = stream.get<std::uint64_t>("seed", 0);
  if (stream.has("max_train_per_task"))
    cfg.stream.max_train_per_task = stream.get<Eigen::Index>("max_train_per_task");
  if (stream.has("max_test_per_task"))
    cfg.stream.max_test_per_task = stream.get<Eigen::Index>("max_test_per_task");

  ObjectReader src(stream.raw("source"), "stream.source");
  const auto type = src.get<std::string>("type");
  if (type == "synthetic") {
    cfg.source.type = DataSource::Type::Synthetic;
    cfg.source.classes = src.get<int>("classes", cfg.source.classes);
    cfg.source.dim = src.get<int>("dim", cfg.source.dim);
    cfg.source.per_class = src.get<int>("per_class", cfg.source.per_class);
    cfg.source.sigma = src.get<double>("sigma", cfg.source.sigma);
    cfg.source.test_fraction = src.get<double>("test_fraction", cfg.source.test_fraction);
  } else if (type == "idx") {
    cfg.source.type = DataSource::Type::Idx;
    cfg.source.train_images = resolve(src.get<std::string>("train_images"), base_dir);
    cfg.source.train_labels = resolve(src.get<std::string>("train_labels"), base_dir);
    cfg.source.test_images = resolve(src.get<std::string>("test_images"), base_dir);
    cfg.source.test_labels = resolve(src.get<std::string>("test_labels"), base_dir);
  } else {
    throw ConfigError("stream.source.type must be 'synthetic' or 'idx', got '" + type + "'");
  }
  src.finish();
  stream.finish();
  top.finish();
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig &cfg) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  if (!cfg.name.empty())
    j["name"] = cfg.name;
  j["method"] = to_string(cfg.method);
  if (cfg.epsilon)
    j["epsilon"] = *cfg.epsilon;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["mem_per_class"] = cfg.mem_per_class;
  j["ref_batch_size"] = cfg.ref_batch_size;
  j["seeds"] = cfg.seeds;
  j["epochs_per_task"] = cfg.epochs_per_task;
  j["lca_beta"] = cfg.lca_beta;
  j["phase"] = cfg.phase == Phase::Eval ? "eval" : "cv";
  j["arch"] = {{"hidden_dims", cfg.hidden_dims}};

  json stream;
  stream["kind"] = to_string(cfg.stream.kind);
  stream["total_tasks"] = cfg.stream.total_tasks;
  stream["cv_tasks"] = cfg.stream.cv_tasks;
  stream["classes_per_task"] = cfg.stream.classes_per_task;
  stream["seed"] = cfg.stream.seed;
  if (cfg.stream.max_train_per_task)
    stream["max_train_per_task"] = *cfg.stream.max_train_per_task;
  if (cfg.stream.max_test_per_task)
    stream["max_test_per_task"] = *cfg.stream.max_test_per_task;
  json src;
  if (cfg.source.type == DataSource::Type::Synthetic) {
    src = {{"type", "synthetic"},
           {"classes", cfg.source.classes},
           {"dim", cfg.source.dim},
           {"per_class", cfg.source.per_class},
           {"sigma", cfg.source.sigma},
           {"test_fraction", cfg.source.test_fraction}};
  } else {
    src = {{"type", "idx"},
           {"train_images", cfg.source.train_images.string()},
           {"train_labels", cfg.source.train_labels.string()},
           {"test_images", cfg.source.test_images.string()},
           {"test_labels", cfg.source.test_labels.string()}};
  }
  stream["source"] = src;
  j["stream"] = stream;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

std::string config_hash(const ExperimentConfig &cfg) {
  json j = config_to_json(cfg);
  j.erase("seeds");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

} // namespace softgem
