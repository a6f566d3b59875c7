#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "softgem/config.hpp"

namespace fixture {

// A few-second continual-learning run on synthetic clusters.
inline softgem::ExperimentConfig tiny(softgem::Method method, int tasks = 3) {
  softgem::ExperimentConfig cfg;
  cfg.method = method;
  if (method == softgem::Method::SOFTGEM)
    cfg.epsilon = 0.3;
  cfg.stream.total_tasks = tasks;
  cfg.stream.seed = 7;
  cfg.source.classes = 4;
  cfg.source.dim = 8;
  cfg.source.per_class = 100;
  cfg.hidden_dims = {12};
  cfg.mem_per_class = 4;
  cfg.ref_batch_size = 16;
  cfg.seeds = {1};
  return cfg;
}

inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "softgem_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace fixture
