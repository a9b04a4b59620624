#include "carleman/cost.hpp"

#include "carleman/bounds.hpp"
#include "carleman/carleman.hpp"

#include <cmath>
#include <limits>

namespace carleman {

namespace {

double log_floor(double x) { return std::max(1.0, std::log(x)); }

double geometric_sum(double r2, int N) {
  double sum = 0.0;
  double term = 1.0;
  for (int l = 0; l < N; ++l) {
    sum += term;
    term *= r2;
  }
  return sum;
}

}  // namespace

double amplification_factor(double u_in_norm, double u_T_norm, double gamma, int N) {
  require(gamma > 0.0, "amplification: gamma must be > 0");
  require(u_T_norm > 0.0, "amplification: ||u(T)|| must be > 0");
  require(N >= 1, "amplification: N must be >= 1");
  const double r = u_in_norm / gamma;
  return std::sqrt(geometric_sum(r * r, N)) * u_in_norm / u_T_norm;
}

double amplification_factor_at_gamma_max(double u_in_norm, double u_T_norm, double R, int M) {
  require(R >= 0.0 && R < 1.0, "amplification: R must be in [0, 1)");
  require(u_T_norm > 0.0, "amplification: ||u(T)|| must be > 0");
  require(M >= 2, "amplification: M must be >= 2");
  return u_in_norm / u_T_norm / std::sqrt(1.0 - std::pow(R, 2.0 / double(M - 1)));
}

CostEstimate ode_cost_estimate(const NonlinearOded& ode, double gamma, double T, double eps,
                               double lambda_f1, double lambda_fm, std::optional<double> u_T_norm) {
  require(lambda_f1 > 0.0 && lambda_fm >= 0.0, "cost: lambda values must be positive");
  require(T > 0.0, "cost: T must be > 0");
  require(eps > 0.0 && eps < 1.0, "cost: eps must be in (0, 1)");
  const OdeSummary s = summarize(ode);
  CostEstimate est;
  est.R = s.r_ratio();
  require(est.R < 1.0, "cost: R = " + std::to_string(est.R) + " must be < 1");
  est.gamma = gamma;
  est.epsilon = eps;
  est.T = T;
  est.lambda_f1 = lambda_f1;
  est.lambda_fm = lambda_fm;
  est.u_in_norm = s.u_norm;
  if (u_T_norm) {
    require(*u_T_norm > 0.0, "cost: ||u(T)|| must be > 0");
    est.u_T_norm = *u_T_norm;
    est.u_T_source = "user";
  } else {
    const Trajectory<double> traj = reference_solve(ode, T, 1e-10, 2);
    est.u_T_norm = traj.states.back().norm();
    est.u_T_source = "measured";
  }
  est.N = est.R > 0.0 ? required_carleman_order(est.R, s.M, eps).closed_form : s.M + 1;
  est.lambda_carleman = lambda_value(est.N, s.M, gamma, lambda_f1, lambda_fm);
  est.amplification = amplification_factor(s.u_norm, est.u_T_norm, gamma, est.N);

  const double N = est.N;
  const double log_accuracy = log_floor(N / eps);
  const double log_taylor = log_floor(N * lambda_f1 * T / eps);
  const double log_n = std::log2(std::max<double>(double(ode.n), 2.0));
  const double base = est.amplification * est.lambda_carleman * T;
  est.calls_block_encoding = base * log_accuracy * log_taylor;
  est.calls_state_prep = base * N * log_accuracy;
  est.extra_gates = base * N * double(s.M) * log_accuracy * log_taylor * log_taylor * log_n;
  est.assumptions = {"leading-order: unit constants in every O(.)",
                     "logarithms natural, floored at 1; log n taken base 2 with n >= 2",
                     "N from the closed-form truncation order",
                     "||u(T)|| " + est.u_T_source};
  if (!std::isfinite(est.extra_gates)) throw NumericError("cost: non-finite estimate");
  return est;
}

CostEstimate pde_cost_estimate(const ReactionDiffusionProblem& pde, double T, double eps,
                               std::optional<double> u_T_norm, std::optional<double> gamma) {
  const NonlinearOded ode = discretize(pde);
  const StabilityReport rep = stability_report(pde, ode);
  double g = 0.0;
  if (gamma) {
    g = *gamma;
  } else {
    const GammaLimit<double> lim = max_stable_gamma(ode);
    g = lim.unbounded ? ode.u_in.norm() : lim.value;
  }
  CostEstimate est = ode_cost_estimate(ode, g, T, eps, lambda_f1(pde), lambda_fm(pde), u_T_norm);
  for (const Verdict* v : rep.verdicts())
    if (!v->passed) est.assumptions.push_back("stability verdict failed: " + v->name);
  est.assumptions.push_back(gamma ? "gamma supplied" : "gamma = gamma_max");
  return est;
}

std::vector<ComparisonRow> prior_work_comparison(const PriorWorkParams& p) {
  require(p.T > 0.0 && p.eps > 0.0 && p.eps < 1.0, "comparison: need T > 0 and eps in (0, 1)");
  require(p.u_T_norm > 0.0, "comparison: ||u(T)|| must be > 0");
  require(p.N >= 1 && p.n >= 1 && p.d >= 1, "comparison: N, n, d must be positive");
  std::vector<ComparisonRow> rows;
  const double n = double(p.n);
  const double N = p.N;

  {
    ComparisonRow row{"euler_history_state", 0.0, true, {}};
    const double G = p.history_norm > 0.0 ? p.history_norm : p.u_T_norm;
    const double growth = std::pow(p.u_in_norm, 2.0 * N);
    const double log_arg = std::abs(p.c) * p.D * p.d * p.M * std::pow(n, 1.0 / p.d) * N *
                           p.sparsity * p.T / (G * p.eps);
    row.value = 1.0 / (G * G * p.eps) * p.sparsity * p.T * p.T * p.D * p.D * p.d * p.d *
                std::pow(n, 4.0 / p.d) * N * N * N * growth *
                std::pow(log_floor(log_arg), p.polylog_exponent);
    row.finite = std::isfinite(row.value);
    row.notes.push_back("contains ||u_in||^(2N) = " + std::to_string(growth));
    row.notes.push_back(p.u_in_norm <= 1.0 ? "regime: ||u_in|| <= 1, growth factor <= 1"
                                           : "regime: ||u_in|| > 1, exponential in N");
    if (p.history_norm <= 0.0) row.notes.push_back("history-state norm G taken as ||u(T)||");
    rows.push_back(std::move(row));
  }
  {
    ComparisonRow row{"taylor_no_rescaling", 0.0, true, {}};
    const double poly = std::pow(N * log_floor(1.0 / p.eps) * log_floor(p.T * N * p.lambda_f1),
                                 p.polylog_exponent);
    row.value = p.u_in_norm / p.u_T_norm * p.lambda_f1 * p.T * N * poly;
    row.finite = std::isfinite(row.value);
    row.notes.push_back("poly(N, log 1/eps, log T N lambda) taken as the product");
    rows.push_back(std::move(row));
  }
  {
    ComparisonRow row{"taylor_no_rescaling_order", 0.0, true, {}};
    const double denom = std::log(1.0 / p.u_in_norm);
    if (p.u_in_norm == 1.0) {
      row.value = std::numeric_limits<double>::infinity();
      row.finite = false;
      row.notes.push_back("||u_in|| = 1: log(1/||u_in||) = 0, N is infinite");
    } else if (!(denom > 0.0)) {
      row.value = std::numeric_limits<double>::infinity();
      row.finite = false;
      row.notes.push_back("||u_in|| > 1: formula undefined (negative denominator)");
    } else {
      const double num = 2.0 * std::log(p.T * p.f2_norm / (p.delta * p.u_T_norm));
      row.value = std::max(1.0, std::ceil(num / denom));
    }
    rows.push_back(std::move(row));
  }
  {
    ComparisonRow row{"this_work", 0.0, true, {}};
    const double R = p.u_in_norm > 0.0 && p.c != 0.0
                         ? p.f2_norm * std::pow(p.u_in_norm, p.M - 1) / std::abs(p.c)
                         : 0.0;
    if (R >= 1.0) {
      row.value = std::numeric_limits<double>::infinity();
      row.finite = false;
      row.notes.push_back("R >= 1: no convergent truncation");
    } else {
      const double amp = amplification_factor_at_gamma_max(p.u_in_norm, p.u_T_norm, R, p.M);
      row.value = amp * p.lambda_f1 * p.T * N * log_floor(N / p.eps) *
                  log_floor(N * p.lambda_f1 * p.T / p.eps);
      row.notes.push_back("R = " + std::to_string(R) + " with |c| as the dissipation rate");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace carleman
