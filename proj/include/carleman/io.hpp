#pragma once

#include "carleman/nonlinear_ode.hpp"
#include "carleman/pde.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace carleman {

inline constexpr int kSchemaVersion = 1;

/// Numeric knobs shared by every command, with their documented defaults.
struct Knobs {
  std::optional<int> N;  // default: closed-form order for eps
  int K = 10;
  std::optional<double> dt;
  std::optional<Index> steps;
  double eps = 1e-2;
  std::string gamma_mode = "norm_uin";  // norm_uin | gamma_max | explicit
  std::optional<double> gamma;
  double tol = 1e-10;
  int samples = 101;
  bool strict_stability = true;
  std::optional<double> u_T_norm;
  double polylog_exponent = 1.0;
  std::optional<double> derivative_bound;  // C(u,k) for the PDE error bound
  std::optional<double> T;                 // overrides the problem horizon
};

struct ProblemSpec {
  enum class Kind { ode, pde };
  Kind kind = Kind::ode;
  NonlinearOded ode;             // filled for both kinds (discretised for pde)
  ReactionDiffusionProblem pde;  // pde only
};

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string command;
  std::string figure;
  ProblemSpec problem;
  bool has_problem = false;
  Knobs knobs;
  std::uint64_t seed = 20240611;
  std::vector<SweepAxis> axes;
  nlohmann::json raw;  // the config as read, echoed into outputs
  std::string hash;
};

/// FNV-1a (64 bit) of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

/// Problem blocks. ODE: {"type":"ode","n","M","F1":[[...]],"FM":[[row,col,value],...],
/// "u_in":[...],"T"}. PDE: {"type":"pde","D","c","b","M","d","m","k","T",
/// "initial":{"profile":..., ...}}. Relative file references resolve against base_dir.
ProblemSpec parse_problem(const nlohmann::json& j, const std::filesystem::path& base_dir);
Knobs parse_knobs(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json ode_to_json(const NonlinearOded& ode);
nlohmann::json knobs_to_json(const Knobs& k);

/// %.17g formatting; non-finite values print as inf, -inf, nan.
std::string format_number(double v);

/// Comma-separated table with a header row, preceded by "# key: value" lines.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_comment(const std::string& key, const std::string& value);
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::pair<std::string, std::string>> comments_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes content to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

/// Reads one number per cell from a CSV file (comment lines with '#' and a
/// non-numeric header are skipped), row-major.
std::vector<double> read_numbers_csv(const std::filesystem::path& path);

}  // namespace carleman
