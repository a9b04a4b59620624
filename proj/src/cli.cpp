#include "carleman/cli.hpp"

#include "carleman/bounds.hpp"
#include "carleman/carleman.hpp"
#include "carleman/cost.hpp"
#include "carleman/pipeline.hpp"
#include "carleman/stencil.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

namespace carleman {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

json vec(const Vector<double>& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json envelope(const RunConfig& cfg, const std::string& command, json result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = cfg.hash;
  j["config"] = cfg.raw;
  j["command"] = command;
  j["result"] = std::move(result);
  return j;
}

CsvTable table(const RunConfig& cfg, std::vector<std::string> header) {
  CsvTable t(std::move(header));
  t.add_comment("config_hash", cfg.hash);
  t.add_comment("config", cfg.raw.dump());
  return t;
}

struct Outputs {
  fs::path dir;
  std::vector<fs::path> written;

  void json_file(const std::string& name, const json& j) {
    const fs::path p = dir / name;
    write_atomic(p, j.dump(2) + "\n");
    written.push_back(p);
  }
  void csv_file(const std::string& name, const CsvTable& t) {
    const fs::path p = dir / name;
    write_atomic(p, t.str());
    written.push_back(p);
  }
  void text_file(const std::string& name, const std::string& s) {
    const fs::path p = dir / name;
    write_atomic(p, s);
    written.push_back(p);
  }
};

const NonlinearOded& need_problem(const RunConfig& cfg) {
  require(cfg.has_problem, "command '" + cfg.command + "' needs a problem block");
  return cfg.problem.ode;
}

NonlinearOded horizon_ode(const RunConfig& cfg) {
  NonlinearOded ode = need_problem(cfg);
  if (cfg.knobs.T) ode.T = *cfg.knobs.T;
  return ode;
}

void cmd_linearize(const RunConfig& cfg, Outputs& out) {
  const NonlinearOded ode = horizon_ode(cfg);
  const double gamma = resolve_gamma(ode, cfg.knobs);
  const int N = resolve_order(ode, cfg.knobs);
  const CarlemanMatrix<double> mat(rescale(ode, gamma), N);
  json r;
  r["n"] = ode.n;
  r["M"] = ode.M;
  r["N"] = N;
  r["gamma"] = num(gamma);
  r["total_dimension"] = mat.total_size();
  r["lambda0"] = num(mat.lambda0());
  r["f1_norm"] = num(mat.f1_norm());
  r["fm_norm"] = num(mat.fm_norm());
  r["gershgorin_max_eig_bound"] = num(mat.gershgorin_max_eig_bound());
  r["spectral_norm_bound"] = num(mat.spectral_norm_bound());
  r["lambda_value_norms"] = num(mat.lambda_value(mat.f1_norm(), mat.fm_norm()));
  const GammaLimit<double> gmax = max_stable_gamma(ode);
  r["gamma_max"] = num(gmax.value);
  r["gamma_max_unbounded"] = gmax.unbounded;
  if (mat.total_size() <= 200000) r["max_row_nonzeros"] = mat.sparsity_count();
  json levels = json::array();
  for (int j = 1; j <= N; ++j)
    levels.push_back({{"level", j},
                      {"offset", mat.layout().offset(j)},
                      {"size", mat.layout().size(j)},
                      {"padded_offset", mat.layout().padded_index(j, 0)}});
  r["levels"] = std::move(levels);
  if (mat.total_size() <= 4096) {
    std::ostringstream mm;
    write_matrix_market(mm, mat.to_sparse());
    out.text_file("carleman.mtx", mm.str());
    r["matrix_market"] = "carleman.mtx";
  }
  out.json_file("linearize.json", envelope(cfg, "linearize", std::move(r)));
}

void cmd_evolve(const RunConfig& cfg, Outputs& out) {
  const NonlinearOded ode = horizon_ode(cfg);
  const PipelineResult res = run_pipeline(ode, cfg.knobs);

  std::vector<std::string> header{"t", "y_norm", "y1_norm", "share_1"};
  for (Index i = 1; i <= ode.n; ++i) header.push_back("u_hat_" + std::to_string(i));
  CsvTable traj = table(cfg, header);
  std::vector<std::string> ref_header{"t"};
  for (Index i = 1; i <= ode.n; ++i) ref_header.push_back("u_" + std::to_string(i));
  CsvTable ref = table(cfg, ref_header);
  CsvTable err = table(cfg, {"t", "error", "eta_1", "component_bound"});
  for (const PipelineSample& s : res.samples) {
    std::vector<double> row{s.t, s.y_norm, s.block1_norm, s.share1};
    for (Index i = 0; i < ode.n; ++i) row.push_back(s.u_hat(i));
    traj.add_row(row);
    std::vector<double> rrow{s.t};
    for (Index i = 0; i < ode.n; ++i) rrow.push_back(s.u_ref(i));
    ref.add_row(rrow);
    err.add_row(std::vector<double>{s.t, s.error, s.eta1, s.component_bound});
  }
  out.csv_file("trajectory.csv", traj);
  out.csv_file("reference.csv", ref);
  out.csv_file("errors.csv", err);

  json r;
  r["N"] = res.N;
  r["K"] = res.K;
  r["gamma"] = num(res.gamma);
  r["R"] = num(res.R);
  r["lambda0"] = num(res.lambda0);
  r["dt"] = num(res.plan.dt);
  r["steps"] = res.plan.steps;
  r["gershgorin_max_eig_bound"] = num(res.gershgorin);
  r["spectral_norm_bound"] = num(res.norm_bound);
  r["taylor_defect_bound"] = num(res.taylor_defect);
  r["norm_non_increasing"] = res.norm_monotone;
  const PipelineSample& last = res.samples.back();
  r["final"] = {{"t", num(last.t)},
                {"u_hat", vec(last.u_hat)},
                {"u_ref", vec(last.u_ref)},
                {"error", num(last.error)},
                {"relative_error", num(res.final_relative_error())},
                {"eta_1", num(last.eta1)},
                {"component_bound", num(last.component_bound)},
                {"share_1", num(last.share1)}};
  r["success_probability_initial"] = num(success_probability(ode.u_in.norm(), res.gamma, res.N));
  out.json_file("evolve.json", envelope(cfg, "evolve", std::move(r)));
}

void cmd_bounds(const RunConfig& cfg, Outputs& out) {
  const NonlinearOded ode = horizon_ode(cfg);
  const OdeSummary s = summarize(ode);
  const double R = s.r_ratio();
  if (cfg.knobs.strict_stability)
    require(R < 1.0, "bounds: R = " + format_number(R) + " >= 1 (strict stability)");
  const double gamma = resolve_gamma(ode, cfg.knobs);
  const int N = R < 1.0 ? resolve_order(ode, cfg.knobs) : (cfg.knobs.N ? *cfg.knobs.N : ode.M + 1);
  std::vector<double> times;
  for (int i = 0; i < cfg.knobs.samples; ++i)
    times.push_back(ode.T * double(i) / double(cfg.knobs.samples - 1));
  const BoundReport rep = make_bound_report(ode, gamma, N, times, cfg.knobs.eps);

  CsvTable t = table(cfg, {"t", "j", "k", "f_value", "bound"});
  for (const BoundRow& row : rep.rows)
    t.add_row(std::vector<double>{row.t, double(row.j), double(row.k), row.f, row.bound});
  out.csv_file("bounds.csv", t);

  json r;
  r["R"] = num(rep.R);
  r["lambda0"] = num(rep.lambda0);
  r["gamma"] = num(rep.gamma);
  r["gamma_max"] = num(rep.gamma_max);
  r["gamma_max_unbounded"] = rep.gamma_unbounded;
  r["N"] = rep.N;
  r["M"] = rep.M;
  r["verdicts"] = {{"R_below_one", rep.r_below_one}, {"gamma_within_gamma_max", rep.gamma_stable}};
  if (!rep.rows.empty()) {
    json finals = json::array();
    for (const BoundRow& row : rep.rows)
      if (row.t == times.back()) finals.push_back({{"j", row.j}, {"k", row.k}, {"bound", num(row.bound)}});
    r["bounds_at_T"] = std::move(finals);
  }
  if (!rep.global_bound.empty()) r["global_bound_at_T"] = num(rep.global_bound.back());
  if (rep.order) {
    r["required_order"] = {{"eps", cfg.knobs.eps},
                           {"closed_form", rep.order->closed_form},
                           {"refined", rep.order->refined}};
    CsvTable trace = table(cfg, {"N", "bound"});
    for (const auto& [n, b] : rep.order->trace) trace.add_row(std::vector<double>{double(n), b});
    out.csv_file("order_trace.csv", trace);
  }
  out.json_file("bounds.json", envelope(cfg, "bounds", std::move(r)));
}

json verdict_json(const Verdict& v) {
  return {{"passed", v.passed}, {"lhs", num(v.lhs)}, {"rhs", num(v.rhs)}, {"margin", num(v.margin)}};
}

void cmd_pde(const RunConfig& cfg, Outputs& out) {
  require(cfg.has_problem && cfg.problem.kind == ProblemSpec::Kind::pde,
          "command 'pde' needs a pde problem block");
  ReactionDiffusionProblem pde = cfg.problem.pde;
  if (cfg.knobs.T) pde.T = *cfg.knobs.T;
  const NonlinearOded& ode = cfg.problem.ode;
  const StabilityReport rep = stability_report(pde, ode);
  json r;
  r["n"] = pde.n();
  r["u_max"] = num(rep.u_max);
  r["u_norm"] = num(rep.u_norm);
  r["R"] = num(rep.R);
  r["gamma"] = num(rep.gamma);
  r["gamma_max"] = num(rep.gamma_max);
  r["lambda0"] = num(lambda0(ode.F1));
  r["lambda_f1"] = num(lambda_f1(pde));
  r["lambda_fm"] = num(lambda_fm(pde));
  r["laplacian_norm_bound"] = num(laplacian_norm_bound(pde.k, pde.m, pde.d));
  json verdicts;
  for (const Verdict* v : rep.verdicts()) verdicts[v->name] = verdict_json(*v);
  r["stability"] = std::move(verdicts);
  r["all_verdicts_pass"] = rep.all_passed();
  const bool estimated = !cfg.knobs.derivative_bound.has_value();
  const double C = estimated ? estimate_derivative_bound(pde) : *cfg.knobs.derivative_bound;
  r["derivative_bound"] = {{"value", num(C)}, {"source", estimated ? "spectral estimate" : "user"}};
  if (rep.discretisation.passed) {
    r["discretisation_error_bound_at_T"] = num(discretisation_error_bound(pde, C, pde.T));
    r["discretisation_error_bound_note"] = "unit constant in place of the order symbol";
    if (C > 0.0) {
      const GridSizing g = required_grid_points(pde, C, cfg.knobs.eps);
      r["grid_sizing"] = {{"eps", cfg.knobs.eps},
                          {"scaling_estimate", num(g.scaling_estimate)},
                          {"sufficient", num(g.sufficient)},
                          {"sufficient_exists", g.sufficient_exists},
                          {"m", g.m},
                          {"points", g.points}};
    }
  }
  if (cfg.knobs.strict_stability)
    for (const Verdict* v : rep.verdicts())
      require(v->passed, "pde: stability verdict '" + v->name + "' failed (strict stability)");
  NonlinearOded exported = ode;
  exported.T = pde.T;
  json export_cfg = {{"schema_version", kSchemaVersion}, {"problem", ode_to_json(exported)}};
  out.json_file("problem_ode.json", export_cfg);
  out.json_file("pde.json", envelope(cfg, "pde", std::move(r)));
}

json cost_json(const CostEstimate& e) {
  return {{"N", e.N},
          {"R", num(e.R)},
          {"gamma", num(e.gamma)},
          {"epsilon", num(e.epsilon)},
          {"T", num(e.T)},
          {"lambda_f1", num(e.lambda_f1)},
          {"lambda_fm", num(e.lambda_fm)},
          {"lambda_carleman", num(e.lambda_carleman)},
          {"amplification", num(e.amplification)},
          {"u_in_norm", num(e.u_in_norm)},
          {"u_T_norm", num(e.u_T_norm)},
          {"u_T_source", e.u_T_source},
          {"calls_block_encoding", num(e.calls_block_encoding)},
          {"calls_state_prep", num(e.calls_state_prep)},
          {"extra_gates", num(e.extra_gates)},
          {"assumptions", e.assumptions}};
}

void cmd_cost(const RunConfig& cfg, Outputs& out) {
  const NonlinearOded ode = horizon_ode(cfg);
  const Knobs& k = cfg.knobs;
  CostEstimate est;
  PriorWorkParams p;
  if (cfg.problem.kind == ProblemSpec::Kind::pde) {
    ReactionDiffusionProblem pde = cfg.problem.pde;
    pde.T = ode.T;
    std::optional<double> g;
    if (k.gamma_mode != "gamma_max") g = resolve_gamma(ode, k);
    est = pde_cost_estimate(pde, ode.T, k.eps, k.u_T_norm, g);
    p.d = pde.d;
    p.D = pde.D;
    p.c = pde.c;
    p.sparsity = 2 * pde.k + 1;
  } else {
    const double gamma = resolve_gamma(ode, k);
    const double l1 = f1_norm(ode.F1);
    est = ode_cost_estimate(ode, gamma, ode.T, k.eps, l1, fm_norm(ode.FM), k.u_T_norm);
    p.c = lambda0(ode.F1);
    p.D = 0.0;
    Index s = 1;
    for (Index r = 0; r < ode.F1.outerSize(); ++r) s = std::max<Index>(s, ode.F1.innerVector(r).nonZeros());
    p.sparsity = static_cast<int>(s);
  }
  p.n = ode.n;
  p.M = ode.M;
  p.T = ode.T;
  p.eps = k.eps;
  p.delta = k.eps;
  p.u_in_norm = est.u_in_norm;
  p.u_T_norm = est.u_T_norm;
  p.lambda_f1 = est.lambda_f1;
  p.f2_norm = fm_norm(ode.FM);
  p.N = est.N;
  p.polylog_exponent = k.polylog_exponent;
  const std::vector<ComparisonRow> rows = prior_work_comparison(p);
  CsvTable t = table(cfg, {"method", "value", "finite"});
  json comp = json::array();
  for (const ComparisonRow& row : rows) {
    t.add_row(std::vector<std::string>{row.method, format_number(row.value), row.finite ? "1" : "0"});
    comp.push_back({{"method", row.method}, {"value", num(row.value)}, {"finite", row.finite}, {"notes", row.notes}});
  }
  out.csv_file("comparison.csv", t);
  json r = cost_json(est);
  r["comparison"] = std::move(comp);
  out.json_file("cost.json", envelope(cfg, "cost", std::move(r)));
}

void figure_maxnorm(const RunConfig& cfg, Outputs& out) {
  CsvTable t = table(cfg, {"k", "tau", "inf_norm"});
  json peaks = json::array();
  for (int k : {2, 3, 4}) {
    const GKappaCurve c = g_kappa(k, 1.0, 1000, 128);
    for (std::size_t i = 0; i < c.tau.size(); ++i)
      t.add_row(std::vector<double>{double(k), c.tau[i], c.inf_norm[i]});
    peaks.push_back({{"k", k}, {"G", num(c.value)}, {"argmax", num(c.argmax)}});
  }
  t.add_comment("initial_slope_k2", format_number(inf_norm_initial_slope(2)));
  out.csv_file("maxnorm.csv", t);
  out.json_file("maxnorm.json", envelope(cfg, "figures", {{"figure", "maxnorm"}, {"peaks", peaks}}));
}

void figure_fdconv(const RunConfig& cfg, Outputs& out) {
  const std::vector<int> ks{1, 2};
  const std::vector<Index> ms{16, 32, 64, 128};
  const std::vector<ConvergenceRow> rows = convergence_study(ks, ms);
  CsvTable t = table(cfg, {"k", "m", "err_max", "err_2"});
  for (const ConvergenceRow& r : rows)
    t.add_row(std::vector<double>{double(r.k), double(r.m), r.err_max, r.err_2});
  json slopes = json::array();
  for (int k : ks) {
    std::vector<double> m, e;
    for (const ConvergenceRow& r : rows)
      if (r.k == k) {
        m.push_back(double(r.m));
        e.push_back(r.err_max);
      }
    const double slope = fitted_log_slope(m, e);
    t.add_comment("fitted_slope_k" + std::to_string(k), format_number(slope));
    slopes.push_back({{"k", k}, {"slope", num(slope)}});
  }
  out.csv_file("fdconv.csv", t);
  out.json_file("fdconv.json", envelope(cfg, "figures", {{"figure", "fdconv"}, {"slopes", slopes}}));
}

void figure_ffactor(const RunConfig& cfg, Outputs& out) {
  CsvTable t = table(cfg, {"k", "tau", "f_value", "simple_bound"});
  for (int k = 1; k <= 10; ++k)
    for (int i = 0; i <= 400; ++i) {
      const double tau = 20.0 * double(i) / 400.0;
      t.add_row(std::vector<double>{double(k), tau, f_value(1, k, 2, tau), 1.0});
    }
  out.csv_file("ffactor.csv", t);
}

void figure_eigen(const RunConfig& cfg, Outputs& out) {
  int k = 2;
  Index m = 16;
  if (cfg.has_problem && cfg.problem.kind == ProblemSpec::Kind::pde) {
    k = cfg.problem.pde.k;
    m = cfg.problem.pde.m;
  }
  CsvTable t = table(cfg, {"ell", "lambda"});
  const std::vector<double> lam = laplacian_eigenvalues_periodic(k, m);
  for (std::size_t l = 0; l < lam.size(); ++l) t.add_row(std::vector<double>{double(l), lam[l]});
  out.csv_file("eigenvalues.csv", t);
}

void cmd_figures(const RunConfig& cfg, Outputs& out) {
  const std::string fig = cfg.figure.empty() ? "all" : cfg.figure;
  require(fig == "all" || fig == "maxnorm" || fig == "fdconv" || fig == "ffactor" || fig == "eigen",
          "figures: unknown figure '" + fig + "' (maxnorm, fdconv, ffactor, eigen, all)");
  if (fig == "all" || fig == "maxnorm") figure_maxnorm(cfg, out);
  if (fig == "all" || fig == "fdconv") figure_fdconv(cfg, out);
  if (fig == "all" || fig == "ffactor") figure_ffactor(cfg, out);
  if (fig == "all" || fig == "eigen") figure_eigen(cfg, out);
}

bool is_problem_axis(const std::string& name) {
  return name == "k" || name == "m" || name == "D" || name == "c" || name == "b";
}

void apply_axis(const std::string& name, double v, Knobs& k, ReactionDiffusionProblem& pde) {
  auto as_int = [&](double x) {
    require(x == std::floor(x), "sweep: axis '" + name + "' needs integer values");
    return static_cast<int>(x);
  };
  if (name == "N") k.N = as_int(v);
  else if (name == "K") k.K = as_int(v);
  else if (name == "dt") k.dt = v;
  else if (name == "steps") k.steps = as_int(v);
  else if (name == "eps") k.eps = v;
  else if (name == "gamma") {
    k.gamma_mode = "explicit";
    k.gamma = v;
  } else if (name == "T") k.T = v;
  else if (name == "tol") k.tol = v;
  else if (name == "k") pde.k = as_int(v);
  else if (name == "m") pde.m = as_int(v);
  else if (name == "D") pde.D = v;
  else if (name == "c") pde.c = v;
  else if (name == "b") pde.b = v;
  else throw ValidationError("sweep: unknown axis '" + name + "'");
}

void cmd_sweep(const RunConfig& cfg, Outputs& out, int workers) {
  const std::vector<SweepRow> rows = sweep(cfg, workers);
  std::vector<std::string> header;
  for (const SweepAxis& a : cfg.axes) header.push_back(a.name);
  header.push_back("status");
  for (const std::string& m : sweep_metric_names()) header.push_back(m);
  CsvTable t = table(cfg, header);
  for (const SweepRow& r : rows) {
    std::vector<std::string> cells;
    for (double v : r.axis_values) cells.push_back(format_number(v));
    cells.push_back(std::to_string(r.status));
    for (double v : r.metrics) cells.push_back(format_number(v));
    t.add_row(cells);
  }
  out.csv_file("sweep.csv", t);
}

}  // namespace

std::vector<std::string> sweep_metric_names() {
  return {"R", "gamma", "N", "dt", "steps", "eta1_T", "bound_T", "relative_error_T",
          "max_eta_over_bound", "share1_T", "success_probability", "gershgorin"};
}

std::vector<SweepRow> sweep(const RunConfig& cfg, int workers) {
  need_problem(cfg);
  for (const SweepAxis& a : cfg.axes) {
    if (is_problem_axis(a.name))
      require(cfg.problem.kind == ProblemSpec::Kind::pde,
              "sweep: axis '" + a.name + "' needs a pde problem");
  }
  // Empty axes contribute a single implicit point.
  std::vector<std::size_t> sizes;
  std::size_t total = 1;
  for (const SweepAxis& a : cfg.axes) {
    sizes.push_back(std::max<std::size_t>(1, a.values.size()));
    total *= sizes.back();
  }
  std::vector<SweepRow> rows(total);
  const std::size_t n_metrics = sweep_metric_names().size();

  auto evaluate = [&](std::size_t idx) {
    SweepRow& row = rows[idx];
    Knobs k = cfg.knobs;
    ReactionDiffusionProblem pde = cfg.problem.pde;
    std::size_t rest = idx;
    std::vector<std::size_t> pos(cfg.axes.size());
    for (std::size_t a = cfg.axes.size(); a-- > 0;) {
      pos[a] = rest % sizes[a];
      rest /= sizes[a];
    }
    bool rediscretise = false;
    for (std::size_t a = 0; a < cfg.axes.size(); ++a) {
      const SweepAxis& axis = cfg.axes[a];
      if (axis.values.empty()) {
        row.axis_values.push_back(std::nan(""));
        continue;
      }
      const double v = axis.values[pos[a]];
      row.axis_values.push_back(v);
      try {
        apply_axis(axis.name, v, k, pde);
      } catch (const ValidationError& e) {
        row.status = kExitValidation;
        row.message = e.what();
      }
      rediscretise = rediscretise || is_problem_axis(axis.name);
    }
    row.metrics.assign(n_metrics, std::nan(""));
    if (row.status != kExitOk) return;
    try {
      const NonlinearOded ode = rediscretise ? discretize(pde) : cfg.problem.ode;
      const PipelineResult res = run_pipeline(ode, k);
      double worst = 0.0;
      for (const PipelineSample& s : res.samples)
        if (s.component_bound > 0.0) worst = std::max(worst, s.eta1 / s.component_bound);
      const PipelineSample& last = res.samples.back();
      row.metrics = {res.R,
                     res.gamma,
                     double(res.N),
                     res.plan.dt,
                     double(res.plan.steps),
                     last.eta1,
                     last.component_bound,
                     res.final_relative_error(),
                     worst,
                     last.share1,
                     success_probability(ode.u_in.norm(), res.gamma, res.N),
                     res.gershgorin};
    } catch (const ValidationError& e) {
      row.status = kExitValidation;
      row.message = e.what();
    } catch (const NumericError& e) {
      row.status = kExitNumeric;
      row.message = e.what();
    }
  };

  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(total)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) evaluate(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  return rows;
}

std::vector<fs::path> run_command(const RunConfig& cfg, const CliOptions& opts) {
  Outputs out{opts.out_dir, {}};
  const std::string& c = cfg.command;
  if (c == "linearize") cmd_linearize(cfg, out);
  else if (c == "evolve") cmd_evolve(cfg, out);
  else if (c == "bounds") cmd_bounds(cfg, out);
  else if (c == "pde") cmd_pde(cfg, out);
  else if (c == "cost") cmd_cost(cfg, out);
  else if (c == "figures") cmd_figures(cfg, out);
  else if (c == "sweep") cmd_sweep(cfg, out, opts.workers);
  else throw ValidationError("unknown command '" + c + "'");
  return out.written;
}

int resolve_workers(std::optional<int> flag) {
  if (flag) {
    require(*flag >= 1, "--workers must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("CARLEMAN_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v >= 1, "CARLEMAN_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Carleman linearisation laboratory"};
  std::string command;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<int> workers;
  std::optional<bool> strict;
  std::string figure;
  app.add_option("command", command,
                 "linearize | evolve | bounds | pde | cost | figures | sweep (default: from config)");
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--workers", workers, "Worker threads for sweeps (env CARLEMAN_WORKERS)");
  app.add_option("--strict-stability", strict, "Reject unstable configurations (true/false)");
  app.add_option("--figure", figure, "Figure for 'figures': maxnorm, fdconv, ffactor, eigen, all");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  try {
    RunConfig cfg = load_run_config(config_path);
    json overrides = json::object();
    if (!command.empty()) {
      cfg.command = command;
      overrides["command"] = command;
    }
    if (!figure.empty()) {
      cfg.figure = figure;
      overrides["figure"] = figure;
    }
    if (strict) {
      cfg.knobs.strict_stability = *strict;
      overrides["strict_stability"] = *strict;
    }
    if (!overrides.empty()) {
      cfg.raw["cli_overrides"] = overrides;
      cfg.hash = config_hash(cfg.raw);
    }
    require(!cfg.command.empty(), "no command given on the command line or in the config");
    CliOptions opts;
    opts.out_dir = out_dir;
    opts.workers = resolve_workers(workers);
    for (const fs::path& p : run_command(cfg, opts)) out << p.string() << '\n';
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace carleman
