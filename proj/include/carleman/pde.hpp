#pragma once

#include "carleman/nonlinear_ode.hpp"

#include <span>
#include <string>
#include <vector>

namespace carleman {

/// Initial field on the periodic unit cube.
struct InitialCondition {
  enum class Kind { cosine, gaussian, constant, tabulated };

  Kind kind = Kind::cosine;
  /// cosine: A(1 + Π_μ cos 2πx_μ); gaussian: A exp(−|x − x0|²/(2w²)) with the
  /// periodic distance; constant: A.
  double amplitude = 1.0;
  double center = 0.5;
  double width = 0.1;
  /// Row-major grid values for `tabulated`; must hold m^d entries.
  std::vector<double> values;

  double evaluate(std::span<const double> x) const;
};

InitialCondition::Kind parse_profile(const std::string& name);
std::string to_string(InitialCondition::Kind kind);

/// ∂u/∂t = D Δu + c u + b u^M on [0,1]^d with periodic boundaries.
struct ReactionDiffusionProblem {
  double D = 0.0;
  double c = 0.0;
  double b = 0.0;
  int M = 2;
  int d = 1;
  Index m = 0;
  int k = 1;
  double T = 0.0;
  InitialCondition initial;

  Index n() const { return checked_pow(m, d); }
};

void validate(const ReactionDiffusionProblem& pde);

/// Initial condition sampled at x = i/m per axis, row-major (axis 0 slowest).
Vector<double> sample_initial(const ReactionDiffusionProblem& pde);

/// F1 = D L_{k,d} + c I, FM one-sparse with FM(p, p(n^M−1)/(n−1)) = b.
NonlinearOded discretize(const ReactionDiffusionProblem& pde);

struct Verdict {
  std::string name;
  bool passed = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // positive when passed
};

struct StabilityReport {
  double u_max = 0.0;
  double u_norm = 0.0;
  double R = 0.0;
  double gamma = 0.0;
  double gamma_max = 0.0;
  bool gamma_unbounded = false;
  Verdict pde_max_norm;    // u_max^{M−1}|b|/|c| < 1
  Verdict ode_r_ratio;     // R < 1
  Verdict discretisation;  // |c| > M|b| u_max^{M−1}
  Verdict rescaling;       // ‖u_in‖ ≤ γ_max

  bool all_passed() const {
    return pde_max_norm.passed && ode_r_ratio.passed && discretisation.passed && rescaling.passed;
  }
  std::vector<const Verdict*> verdicts() const {
    return {&pde_max_norm, &ode_r_ratio, &discretisation, &rescaling};
  }
};

StabilityReport stability_report(const ReactionDiffusionProblem& pde, const NonlinearOded& ode);

/// Σ_μ sup|∂^{2k+1}u/∂x_μ^{2k+1}| of the initial condition by FFT
/// differentiation on a periodic grid (the problem grid for tabulated data,
/// otherwise at least 128 points per axis).
double estimate_derivative_bound(const ReactionDiffusionProblem& pde);

/// C√n (e/2)^{2k} n^{−(2k−1)/d} (1 − e^{κt})/|κ|, κ = c + M|b|u_max^{M−1}, unit constant.
double discretisation_error_bound(const ReactionDiffusionProblem& pde, double C, double t);

struct GridSizing {
  /// [C(e/2)^{2k}/(|κ|ε)]^{2d/(2(2k−1)+d)}, the scaling estimate.
  double scaling_estimate = 0.0;
  /// Smallest n for which the evaluated bound is ≤ ε for all t; needs 2(2k−1) > d.
  double sufficient = 0.0;
  bool sufficient_exists = false;
  Index m = 0;       // points per axis, ≥ 2k+1
  Index points = 0;  // m^d
};

GridSizing required_grid_points(const ReactionDiffusionProblem& pde, double C, double eps);

/// n_k ≈ (C_k n_1 / C_1)^{1/(2k−1)} for d = 1.
double matched_error_points(int k, double C_k, double C_1, double n_1);

/// λ_F1 = |c| + d D m² (|a_0| + Σ|a_j|).
double lambda_f1(const ReactionDiffusionProblem& pde);
inline double lambda_fm(const ReactionDiffusionProblem& pde) { return std::abs(pde.b); }

double u_max(const ReactionDiffusionProblem& pde);

}  // namespace carleman
