#include "doctest.h"

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "softgem/cli.hpp"
#include "softgem/harness.hpp"

using namespace softgem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "softgem");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path &dir, const std::string &name, const ExperimentConfig &cfg) {
  const auto path = dir / name;
  std::ofstream(path) << config_to_json(cfg).dump(2);
  return path;
}

} // namespace

TEST_CASE("run writes a record") {
  const auto dir = fixture::scratch_dir("cli_run");
  const auto cfg = write_config(dir, "c.json", fixture::tiny(Method::AGEM));
  const auto r = cli({"run", "--config", cfg.string(), "--seed", "1", "--out", (dir / "r").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "r" / "records" / "AGEM__seed1.json"));
  CHECK(fs::exists(dir / "r" / "aggregate.csv"));

  const auto m = cli({"metrics", "--record", (dir / "r" / "records" / "AGEM__seed1.json").string(),
                      "--out", (dir / "m.csv").string()});
  CHECK(m.code == 0);
  const auto stored = load_record(dir / "r" / "records" / "AGEM__seed1.json");
  const auto printed = nlohmann::json::parse(m.out);
  CHECK(printed["A_T"].get<double>() == stored.metrics.average_accuracy);
  CHECK(fs::exists(dir / "m.csv"));
}

TEST_CASE("missing config names the path") {
  const auto r = cli({"run", "--config", "/no/such/config.json", "--out", "/tmp/softgem_unused"});
  CHECK(r.code != 0);
  CHECK(r.err.find("/no/such/config.json") != std::string::npos);
}

TEST_CASE("usage errors print help and fail") {
  CHECK(cli({}).code != 0);
  CHECK(cli({"frobnicate"}).code != 0);
  const auto r = cli({"run", "--out", "x"});
  CHECK(r.code != 0);
  CHECK(r.err.find("config") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("suite over a directory") {
  const auto dir = fixture::scratch_dir("cli_suite");
  fs::create_directories(dir / "configs");
  write_config(dir / "configs", "a.json", fixture::tiny(Method::VAN));
  write_config(dir / "configs", "b.json", fixture::tiny(Method::ER));
  const auto r = cli({"suite", "--configs", (dir / "configs").string(), "--out", (dir / "out").string(),
                      "--jobs", "2"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "out" / "records" / "VAN__seed1.json"));
  CHECK(fs::exists(dir / "out" / "records" / "ER__seed1.json"));
}

TEST_CASE("search-eps on the parabola") {
  const auto dir = fixture::scratch_dir("cli_search");
  const auto r = cli({"search-eps", "--objective", "parabola:0.3", "--points", "11", "--repeats", "5",
                      "--out", dir.string()});
  CHECK(r.code == 0);
  std::istringstream csv(fixture::read_file(dir / "search_history.csv"));
  std::string line;
  std::getline(csv, line);
  std::set<int> repeats;
  while (std::getline(csv, line))
    repeats.insert(std::stoi(line.substr(0, line.find(','))));
  CHECK(!repeats.empty());
  CHECK(static_cast<int>(repeats.size()) <= 6);
  const auto result = nlohmann::json::parse(fixture::read_file(dir / "search_result.json"));
  CHECK(std::abs(result["best_epsilon"].get<double>() - 0.3) < 0.025);

  CHECK(cli({"search-eps", "--objective", "cubic:1", "--out", dir.string()}).code != 0);
  CHECK(cli({"search-eps", "--out", dir.string()}).code != 0);
}
