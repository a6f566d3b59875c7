#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "softgem/task_streams.hpp"

namespace softgem {

enum class Method { VAN, ER, GEM, AGEM, AAGEM, SOFTGEM };

std::string to_string(Method method);
Method parse_method(const std::string &text);
// Methods that keep an episodic memory.
bool uses_memory(Method method);

// Where the base dataset comes from.
struct DataSource {
  enum class Type { Synthetic, Idx } type = Type::Synthetic;
  // synthetic
  int classes = 10;
  int dim = 16;
  int per_class = 100;
  double sigma = 0.3;
  double test_fraction = 0.25;
  // idx
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};

enum class Phase { Eval, CrossValidation };

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  std::string name;
  Method method = Method::VAN;
  std::optional<double> epsilon; // SOFTGEM only
  StreamConfig stream;
  DataSource source;
  std::vector<int> hidden_dims{64, 64};
  double lr = 0.1;
  int batch_size = 10;
  int mem_per_class = 25;
  int ref_batch_size = 256;
  std::vector<std::uint64_t> seeds{1};
  int epochs_per_task = 1;
  Phase phase = Phase::Eval;
  int lca_beta = 10;

  void validate() const;
  // Name used in reports; defaults to the method (with epsilon for SOFTGEM).
  std::string label() const;
};

// Strict parse: unknown keys, wrong types and a schema_version other than
// kConfigSchemaVersion raise ConfigError. Relative IDX paths are resolved
// against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig &cfg);
ExperimentConfig load_config(const std::filesystem::path &path);

// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig &cfg);

} // namespace softgem
