#include "doctest.h"

#include "carleman/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace carleman;
namespace fs = std::filesystem;

namespace {

const char* kBernoulli = R"({
  "schema_version": 1,
  "command": "bounds",
  "problem": {"type": "ode", "n": 1, "M": 2, "F1": [[-1.0]], "FM": [[0, 0, 0.5]],
              "u_in": [1.0], "T": 1.0},
  "knobs": {"N": 6, "K": 12, "dt": 0.01, "eps": 0.01}
})";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("carleman_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "carleman_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace

TEST_CASE("bounds command writes a report carrying the config hash") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, "b.json", kBernoulli);
  const fs::path out = tmp.path / "out";
  REQUIRE(run({"--config", cfg.string(), "--out", out.string()}) == kExitOk);
  const nlohmann::json j = nlohmann::json::parse(read_text(out / "bounds.json"));
  CHECK(j["result"]["R"].get<double>() == doctest::Approx(0.5));
  const std::string hash = j["config_hash"];
  CHECK(hash.size() == 16);
  CHECK(read_text(out / "bounds.csv").find("# config_hash: " + hash) != std::string::npos);
}

TEST_CASE("outputs are byte-identical across runs") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, "b.json", kBernoulli);
  REQUIRE(run({"evolve", "--config", cfg.string(), "--out", (tmp.path / "a").string()}) == kExitOk);
  REQUIRE(run({"evolve", "--config", cfg.string(), "--out", (tmp.path / "b").string()}) == kExitOk);
  for (const char* f : {"trajectory.csv", "errors.csv", "evolve.json"})
    CHECK(read_text(tmp.path / "a" / f) == read_text(tmp.path / "b" / f));
}

TEST_CASE("error exit codes") {
  TempDir tmp;
  const fs::path bad = write_config(tmp.path, "bad.json", R"({"schema_version": 1, "command": "bounds",
    "problem": {"type": "ode", "n": 1, "M": 2, "F1": [[-1.0]], "FM": [[0, 0, 0.5]], "u_in": [1.0], "T": 1.0},
    "knobs": {"NN": 3}})");
  CHECK(run({"--config", bad.string(), "--out", tmp.path.string()}) == kExitValidation);

  const fs::path nodiss = write_config(tmp.path, "nd.json", R"({"schema_version": 1, "command": "bounds",
    "problem": {"type": "ode", "n": 1, "M": 2, "F1": [[1.0]], "FM": [[0, 0, 0.5]], "u_in": [1.0], "T": 1.0}})");
  CHECK(run({"--config", nodiss.string(), "--out", tmp.path.string()}) == kExitValidation);

  const fs::path nophys = write_config(tmp.path, "np.json", R"({"schema_version": 1, "command": "pde",
    "problem": {"type": "pde", "D": 0.2, "c": -2.0, "M": 2, "d": 1, "m": 16, "k": 1, "T": 1.0,
                "initial": {"profile": "cosine", "amplitude": 0.4}}})");
  CHECK(run({"--config", nophys.string(), "--out", tmp.path.string()}) == kExitValidation);

  CHECK(run({"--config", (tmp.path / "missing.json").string()}) != kExitOk);
}

TEST_CASE("sweep rows follow axis order and errors stay per row") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, "s.json", R"({"schema_version": 1, "command": "sweep",
    "problem": {"type": "ode", "n": 1, "M": 2, "F1": [[-1.0]], "FM": [[0, 0, 0.5]], "u_in": [1.0], "T": 1.0},
    "knobs": {"K": 12, "dt": 0.01},
    "axes": [{"name": "N", "values": [8, 3, 5, 4]}]})");
  const RunConfig rc = load_run_config(cfg);
  const auto one = sweep(rc, 1);
  const auto four = sweep(rc, 4);
  REQUIRE(one.size() == 4);
  REQUIRE(four.size() == 4);
  const auto names = sweep_metric_names();
  const auto col = std::find(names.begin(), names.end(), "relative_error_T") - names.begin();
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(one[i].axis_values == four[i].axis_values);
    CHECK(one[i].metrics == four[i].metrics);
    CHECK(one[i].status == kExitOk);
  }
  CHECK(one[0].axis_values[0] == 8.0);
  CHECK(one[1].metrics[static_cast<std::size_t>(col)] > one[3].metrics[static_cast<std::size_t>(col)]);
  CHECK(one[3].metrics[static_cast<std::size_t>(col)] > one[2].metrics[static_cast<std::size_t>(col)]);

  const fs::path bad = write_config(tmp.path, "s2.json", R"({"schema_version": 1, "command": "sweep",
    "problem": {"type": "ode", "n": 1, "M": 2, "F1": [[-1.0]], "FM": [[0, 0, 0.5]], "u_in": [1.0], "T": 1.0},
    "knobs": {"K": 12, "dt": 0.01},
    "axes": [{"name": "N", "values": [1, 4]}]})");
  const auto rows = sweep(load_run_config(bad), 2);
  CHECK(rows[0].status == kExitValidation);
  CHECK(rows[1].status == kExitOk);

  const fs::path single = write_config(tmp.path, "s3.json", R"({"schema_version": 1, "command": "sweep",
    "problem": {"type": "ode", "n": 1, "M": 2, "F1": [[-1.0]], "FM": [[0, 0, 0.5]], "u_in": [1.0], "T": 1.0},
    "knobs": {"N": 4, "K": 12, "dt": 0.01}})");
  CHECK(sweep(load_run_config(single), 2).size() == 1);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  ::setenv("CARLEMAN_WORKERS", "5", 1);
  CHECK(resolve_workers(std::nullopt) == 5);
  CHECK(resolve_workers(2) == 2);
  ::unsetenv("CARLEMAN_WORKERS");
  CHECK(resolve_workers(std::nullopt) >= 1);
}

TEST_CASE("number formatting round-trips") {
  const double v = 0.1 + 0.2;
  CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}
