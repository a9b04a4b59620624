#pragma once

#include "carleman/io.hpp"
#include "carleman/propagator.hpp"

#include <vector>

namespace carleman {

/// γ for the selected mode; ‖u_in‖ = 0 or an unbounded γ_max fall back to 1
/// and ‖u_in‖ respectively.
double resolve_gamma(const NonlinearOded& ode, const Knobs& knobs);

/// Knobs.N when set, otherwise the closed-form order for knobs.eps.
int resolve_order(const NonlinearOded& ode, const Knobs& knobs);

struct PipelineSample {
  double t = 0.0;
  Vector<double> u_hat;  // γ · block 1
  Vector<double> u_ref;
  double y_norm = 0.0;
  double block1_norm = 0.0;
  double share1 = 0.0;
  double error = 0.0;          // ‖u_hat − u_ref‖
  double eta1 = 0.0;           // error / γ, the rescaled-level error
  double component_bound = 0.0;  // bound on eta1
};

struct PipelineResult {
  double gamma = 0.0;
  int N = 0;
  double R = 0.0;
  double lambda0 = 0.0;
  double gershgorin = 0.0;
  double norm_bound = 0.0;
  StepPlan plan;
  int K = 0;
  double taylor_defect = 0.0;  // steps·(‖A‖Δt)^{K+1}/(K+1)!·max‖y‖
  double max_y_norm = 0.0;
  bool norm_monotone = true;
  std::vector<PipelineSample> samples;

  double final_relative_error() const;
};

/// Carleman evolution of the problem against the reference integrator.
PipelineResult run_pipeline(const NonlinearOded& ode, const Knobs& knobs);

}  // namespace carleman
