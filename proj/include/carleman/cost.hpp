#pragma once

#include "carleman/nonlinear_ode.hpp"
#include "carleman/pde.hpp"

#include <optional>
#include <string>
#include <vector>

namespace carleman {

/// sqrt(Σ_{ℓ<N} r^{2ℓ}) ‖u_in‖/‖u(T)‖ with r = ‖u_in‖/γ; equals
/// [(1 − r^{2N})/(1 − r²)]^{1/2}‖u_in‖/‖u(T)‖ and √N‖u_in‖/‖u(T)‖ at r = 1.
double amplification_factor(double u_in_norm, double u_T_norm, double gamma, int N);

/// N → ∞ form at γ = γ_max: ‖u_in‖/‖u(T)‖ / sqrt(1 − R^{2/(M−1)}).
double amplification_factor_at_gamma_max(double u_in_norm, double u_T_norm, double R, int M);

/// Leading-order resource counts (unit constants). Logarithms are natural
/// and floored at 1 so that every factor stays ≥ 1.
struct CostEstimate {
  int N = 0;
  double R = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  double T = 0.0;
  double lambda_f1 = 0.0;
  double lambda_fm = 0.0;
  double lambda_carleman = 0.0;
  double amplification = 0.0;
  double u_in_norm = 0.0;
  double u_T_norm = 0.0;
  std::string u_T_source;  // "measured" or "user"
  double calls_block_encoding = 0.0;
  double calls_state_prep = 0.0;
  double extra_gates = 0.0;
  std::vector<std::string> assumptions;
};

/// ‖u(T)‖ is taken from `u_T_norm` when given, otherwise measured with the
/// reference integrator.
CostEstimate ode_cost_estimate(const NonlinearOded& ode, double gamma, double T, double eps,
                               double lambda_f1, double lambda_fm,
                               std::optional<double> u_T_norm = std::nullopt);

/// λ_F1 and λ_FM from the stencil weights; γ defaults to γ_max.
CostEstimate pde_cost_estimate(const ReactionDiffusionProblem& pde, double T, double eps,
                               std::optional<double> u_T_norm = std::nullopt,
                               std::optional<double> gamma = std::nullopt);

struct PriorWorkParams {
  Index n = 1;
  int d = 1;
  double D = 0.0;
  double c = 0.0;
  int M = 2;
  int sparsity = 1;
  double T = 0.0;
  double eps = 1e-2;
  double delta = 1e-2;  // target error in the N formula of the Taylor-based prior method
  double u_in_norm = 0.0;
  double u_T_norm = 0.0;
  double history_norm = 0.0;  // G: mean solution norm of the history state
  double lambda_f1 = 0.0;
  double f2_norm = 0.0;
  int N = 1;
  double polylog_exponent = 1.0;
};

struct ComparisonRow {
  std::string method;
  double value = 0.0;
  bool finite = true;
  std::vector<std::string> notes;
};

/// Rows: the Euler/history-state method with ‖u_in‖^{2N} growth, the Taylor
/// method's complexity and its truncation-order formula, and this method.
std::vector<ComparisonRow> prior_work_comparison(const PriorWorkParams& p);

}  // namespace carleman
