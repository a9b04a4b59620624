#pragma once

#include "carleman/nonlinear_ode.hpp"

#include <optional>
#include <string>
#include <vector>

namespace carleman {

/// f_{j,k,M}(τ) via the closed form with log-gamma prefactor and a
/// magnitude-sorted compensated alternating sum. Throws NumericError when the
/// raw value leaves [−1e-8, 1+1e-8]; otherwise clamps into [0, 1].
double f_closed(int j, int k, int M, double tau);

/// f_{j,k,M}(τ) from the integral recurrence, evaluated bottom-up on adaptive
/// Chebyshev panels to absolute tolerance `tol`. Requires k ≤ 20.
double f_quadrature(int j, int k, int M, double tau, double tol = 1e-10);

/// f_closed, falling back to f_quadrature when the closed form is rejected.
double f_value(int j, int k, int M, double tau);

/// The k with j ∈ Ω_k = {N − k(M−1) + 1, ..., N − (k−1)(M−1)}.
int omega_k(int N, int j, int M);

/// Scalar quantities of an ODE that every bound needs.
struct OdeSummary {
  int M = 2;
  double lambda0 = 0.0;
  double fm_norm = 0.0;
  double u_norm = 0.0;

  double r_ratio() const;
};

OdeSummary summarize(const NonlinearOded& ode);

/// (M−1)‖FM‖‖u_in‖^{M−1}(1 − e^{N(λ_0+γ^{M−1}‖FM‖)t}) / |λ_0 + γ^{M−1}‖FM‖|.
/// γ must equal ‖u_in‖ unless `allow_gamma_override` is set.
double global_error_bound(const OdeSummary& s, double gamma, int N, double t,
                          bool allow_gamma_override = false);

/// (‖u_in‖/γ)^j R^k f_{j,k,M}(|λ_0| t) with k from Ω_k.
double component_error_bound(const OdeSummary& s, double gamma, int N, int j, double t);

struct OrderSelection {
  int closed_form = 0;
  int refined = 0;
  /// (N, bound) pairs visited by the refinement scan.
  std::vector<std::pair<int, double>> trace;
};

/// N = (M−1)⌈log(1/ε)/log(1/R)⌉ − (M−2), lifted to N > M. When λ_0 and T are
/// given, `refined` is the smallest N whose exact j=1 bound at T is ≤ ε.
OrderSelection required_carleman_order(double R, int M, double eps,
                                       std::optional<double> lambda0 = std::nullopt,
                                       std::optional<double> T = std::nullopt);

struct MaxNormInputs {
  double c = 0.0;            // decay, must be < 0
  double fm_inf_norm = 0.0;  // ‖FM‖_∞ (|b| for the one-sparse PDE nonlinearity)
  double u_max = 0.0;        // ‖u_in‖_max
  int d = 1;
  int M = 2;
};

struct MaxNormBound {
  double value = 0.0;
  double bracket = 0.0;
  int k = 0;
  bool converges = true;
  bool heuristic = true;
};

/// G^{dj} ((‖FM‖_∞/|c|) u_max^{M−1} G^{dM})^k f_{j,k,M}(|c| t); +∞ with
/// converges=false when the bracket is ≥ 1.
MaxNormBound maxnorm_error_bound(const MaxNormInputs& in, int N, int j, double t, double G);

struct BoundRow {
  double t = 0.0;
  int j = 0;
  int k = 0;
  double f = 0.0;
  double bound = 0.0;
};

struct BoundReport {
  double R = 0.0;
  double lambda0 = 0.0;
  double gamma = 0.0;
  double gamma_max = 0.0;
  bool gamma_unbounded = false;
  int N = 0;
  int M = 2;
  bool r_below_one = false;
  bool gamma_stable = false;
  std::optional<OrderSelection> order;
  std::vector<BoundRow> rows;
  std::vector<double> global_bound;  // per time, when γ = ‖u_in‖
};

/// Component bounds for every level j and time in `times`, plus the global
/// bound and the order selection for `eps` when given.
BoundReport make_bound_report(const NonlinearOded& ode, double gamma, int N,
                              const std::vector<double>& times, std::optional<double> eps);

}  // namespace carleman
