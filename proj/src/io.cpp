#include "carleman/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace carleman {

using nlohmann::json;

std::string config_hash(const json& j) {
  const std::string canon = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

template <typename T>
T get_required(const json& j, const char* key, const char* where) {
  if (!j.contains(key))
    throw ValidationError(std::string(where) + ": missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: field '") + key + "' has the wrong type");
  }
}

json resolve_include(const json& j, const std::filesystem::path& base_dir,
                     std::filesystem::path& new_base) {
  new_base = base_dir;
  if (j.is_string()) {
    const std::filesystem::path p = base_dir / j.get<std::string>();
    new_base = p.parent_path();
    try {
      return json::parse(read_text(p));
    } catch (const json::parse_error& e) {
      throw ValidationError("config: cannot parse " + p.string() + ": " + e.what());
    }
  }
  return j;
}

NonlinearOded parse_ode(const json& j) {
  const char* where = "ode problem";
  const int M = get_required<int>(j, "M", where);
  const auto rows = get_required<std::vector<std::vector<double>>>(j, "F1", where);
  const Index n = static_cast<Index>(rows.size());
  require(n >= 1, "ode problem: F1 must be non-empty");
  if (j.contains("n")) require(get_required<Index>(j, "n", where) == n, "ode problem: n disagrees with F1");
  Matrix<double> F1(n, n);
  for (Index r = 0; r < n; ++r) {
    require(static_cast<Index>(rows[static_cast<std::size_t>(r)].size()) == n,
            "ode problem: F1 must be square");
    for (Index c = 0; c < n; ++c) F1(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  std::vector<Eigen::Triplet<double, Index>> fm;
  for (const auto& t : get_required<std::vector<std::vector<double>>>(j, "FM", where)) {
    require(t.size() == 3, "ode problem: FM entries are [row, column, value]");
    require(t[0] == std::floor(t[0]) && t[1] == std::floor(t[1]), "ode problem: FM indices must be integers");
    fm.emplace_back(static_cast<Index>(t[0]), static_cast<Index>(t[1]), t[2]);
  }
  const auto u = get_required<std::vector<double>>(j, "u_in", where);
  Vector<double> u_in = Eigen::Map<const Vector<double>>(u.data(), static_cast<Index>(u.size()));
  const double T = get_required<double>(j, "T", where);
  return make_ode<double>(F1, M, fm, std::move(u_in), T);
}

ReactionDiffusionProblem parse_pde(const json& j, const std::filesystem::path& base_dir) {
  const char* where = "pde problem";
  ReactionDiffusionProblem p;
  p.D = get_required<double>(j, "D", where);
  p.c = get_required<double>(j, "c", where);
  p.b = get_required<double>(j, "b", where);
  p.M = get_required<int>(j, "M", where);
  p.d = get_required<int>(j, "d", where);
  p.m = get_required<Index>(j, "m", where);
  p.k = get_required<int>(j, "k", where);
  p.T = get_required<double>(j, "T", where);
  const json ic = get_required<json>(j, "initial", where);
  p.initial.kind = parse_profile(get_required<std::string>(ic, "profile", "initial condition"));
  p.initial.amplitude = get_or<double>(ic, "amplitude", 1.0);
  p.initial.center = get_or<double>(ic, "center", 0.5);
  p.initial.width = get_or<double>(ic, "width", 0.1);
  if (p.initial.kind == InitialCondition::Kind::tabulated) {
    if (ic.contains("file"))
      p.initial.values = read_numbers_csv(base_dir / get_required<std::string>(ic, "file", "initial condition"));
    else
      p.initial.values = get_required<std::vector<double>>(ic, "values", "initial condition");
  }
  validate(p);
  return p;
}

}  // namespace

ProblemSpec parse_problem(const json& j_in, const std::filesystem::path& base_dir_in) {
  std::filesystem::path base_dir;
  const json j = resolve_include(j_in, base_dir_in, base_dir);
  require(j.is_object(), "problem: expected an object or a file name");
  const std::string type = get_required<std::string>(j, "type", "problem");
  ProblemSpec spec;
  if (type == "ode") {
    spec.kind = ProblemSpec::Kind::ode;
    spec.ode = parse_ode(j);
  } else if (type == "pde") {
    spec.kind = ProblemSpec::Kind::pde;
    spec.pde = parse_pde(j, base_dir);
    spec.ode = discretize(spec.pde);
  } else {
    throw ValidationError("problem: unknown type '" + type + "'");
  }
  return spec;
}

Knobs parse_knobs(const json& j) {
  Knobs k;
  if (j.is_null()) return k;
  require(j.is_object(), "knobs: expected an object");
  static const std::vector<std::string> known = {
      "N", "K", "dt", "steps", "eps", "gamma_mode", "gamma", "tol", "samples",
      "strict_stability", "u_T_norm", "polylog_exponent", "derivative_bound", "T"};
  for (const auto& [key, value] : j.items())
    require(std::find(known.begin(), known.end(), key) != known.end(),
            "knobs: unknown field '" + key + "'");
  k.N = get_opt<int>(j, "N");
  k.K = get_or<int>(j, "K", k.K);
  k.dt = get_opt<double>(j, "dt");
  k.steps = get_opt<Index>(j, "steps");
  k.eps = get_or<double>(j, "eps", k.eps);
  k.gamma_mode = get_or<std::string>(j, "gamma_mode", k.gamma_mode);
  k.gamma = get_opt<double>(j, "gamma");
  k.tol = get_or<double>(j, "tol", k.tol);
  k.samples = get_or<int>(j, "samples", k.samples);
  k.strict_stability = get_or<bool>(j, "strict_stability", k.strict_stability);
  k.u_T_norm = get_opt<double>(j, "u_T_norm");
  k.polylog_exponent = get_or<double>(j, "polylog_exponent", k.polylog_exponent);
  k.derivative_bound = get_opt<double>(j, "derivative_bound");
  k.T = get_opt<double>(j, "T");
  require(k.gamma_mode == "norm_uin" || k.gamma_mode == "gamma_max" || k.gamma_mode == "explicit",
          "knobs: gamma_mode must be norm_uin, gamma_max or explicit");
  require(k.gamma_mode != "explicit" || k.gamma.has_value(), "knobs: explicit gamma_mode needs gamma");
  require(k.K >= 1, "knobs: K must be >= 1");
  require(k.samples >= 2, "knobs: samples must be >= 2");
  return k;
}

json knobs_to_json(const Knobs& k) {
  json j;
  j["N"] = k.N ? json(*k.N) : json(nullptr);
  j["K"] = k.K;
  j["dt"] = k.dt ? json(*k.dt) : json(nullptr);
  j["steps"] = k.steps ? json(*k.steps) : json(nullptr);
  j["eps"] = k.eps;
  j["gamma_mode"] = k.gamma_mode;
  j["gamma"] = k.gamma ? json(*k.gamma) : json(nullptr);
  j["tol"] = k.tol;
  j["samples"] = k.samples;
  j["strict_stability"] = k.strict_stability;
  j["u_T_norm"] = k.u_T_norm ? json(*k.u_T_norm) : json(nullptr);
  j["polylog_exponent"] = k.polylog_exponent;
  j["derivative_bound"] = k.derivative_bound ? json(*k.derivative_bound) : json(nullptr);
  j["T"] = k.T ? json(*k.T) : json(nullptr);
  return j;
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  require(j.is_object(), "config: expected a JSON object");
  RunConfig cfg;
  cfg.raw = j;
  cfg.hash = config_hash(j);
  cfg.schema_version = get_required<int>(j, "schema_version", "config");
  require(cfg.schema_version == kSchemaVersion,
          "config: unsupported schema_version " + std::to_string(cfg.schema_version));
  cfg.command = get_or<std::string>(j, "command", "");
  cfg.figure = get_or<std::string>(j, "figure", "");
  if (j.contains("problem")) {
    cfg.problem = parse_problem(j.at("problem"), base_dir);
    cfg.has_problem = true;
  }
  cfg.knobs = parse_knobs(j.contains("knobs") ? j.at("knobs") : json(nullptr));
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("axes")) {
    for (const auto& a : j.at("axes")) {
      SweepAxis axis;
      axis.name = get_required<std::string>(a, "name", "axis");
      axis.values = get_required<std::vector<double>>(a, "values", "axis");
      cfg.axes.push_back(std::move(axis));
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config: cannot parse " + path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json ode_to_json(const NonlinearOded& ode) {
  json j;
  j["type"] = "ode";
  j["n"] = ode.n;
  j["M"] = ode.M;
  const Matrix<double> F1(ode.F1);
  json rows = json::array();
  for (Index r = 0; r < ode.n; ++r) {
    json row = json::array();
    for (Index c = 0; c < ode.n; ++c) row.push_back(F1(r, c));
    rows.push_back(std::move(row));
  }
  j["F1"] = std::move(rows);
  json fm = json::array();
  for (Index r = 0; r < ode.FM.outerSize(); ++r)
    for (SparseMatrix<double>::InnerIterator it(ode.FM, r); it; ++it)
      fm.push_back(json::array({it.row(), it.col(), it.value()}));
  j["FM"] = std::move(fm);
  j["u_in"] = std::vector<double>(ode.u_in.data(), ode.u_in.data() + ode.u_in.size());
  j["T"] = ode.T;
  return j;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvTable::add_comment(const std::string& key, const std::string& value) {
  comments_.emplace_back(key, value);
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  require(cells.size() == header_.size(), "csv: row width does not match header");
  rows_.push_back(cells);
}

std::string CsvTable::str() const {
  std::ostringstream os;
  for (const auto& [k, v] : comments_) os << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> read_numbers_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (numeric) out.insert(out.end(), row.begin(), row.end());
    else require(out.empty(), "csv " + path.string() + ": non-numeric data row");
  }
  return out;
}

}  // namespace carleman
