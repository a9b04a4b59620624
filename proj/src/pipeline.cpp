#include "carleman/pipeline.hpp"

#include "carleman/bounds.hpp"

#include <cmath>

namespace carleman {

double resolve_gamma(const NonlinearOded& ode, const Knobs& knobs) {
  const double u = ode.u_in.norm();
  if (knobs.gamma_mode == "explicit") {
    require(knobs.gamma && *knobs.gamma > 0.0, "explicit gamma must be > 0");
    return *knobs.gamma;
  }
  if (knobs.gamma_mode == "gamma_max") {
    const GammaLimit<double> g = max_stable_gamma(ode);
    if (!g.unbounded) return g.value;
  }
  return u > 0.0 ? u : 1.0;
}

int resolve_order(const NonlinearOded& ode, const Knobs& knobs) {
  if (knobs.N) return *knobs.N;
  const OdeSummary s = summarize(ode);
  const double R = s.r_ratio();
  if (R == 0.0) return ode.M + 1;
  return required_carleman_order(R, ode.M, knobs.eps).closed_form;
}

double PipelineResult::final_relative_error() const {
  const PipelineSample& last = samples.back();
  const double ref = last.u_ref.norm();
  return ref > 0.0 ? last.error / ref : last.error;
}

PipelineResult run_pipeline(const NonlinearOded& ode, const Knobs& knobs) {
  validate(ode);
  const double T = knobs.T ? *knobs.T : ode.T;
  PipelineResult res;
  res.gamma = resolve_gamma(ode, knobs);
  res.N = resolve_order(ode, knobs);
  const OdeSummary s = summarize(ode);
  res.R = s.r_ratio();
  res.lambda0 = s.lambda0;
  res.K = knobs.K;

  const CarlemanMatrix<double> mat(rescale(ode, res.gamma), res.N);
  res.gershgorin = mat.gershgorin_max_eig_bound();
  res.norm_bound = mat.spectral_norm_bound();
  const CarlemanVector<double> y0 = initial_vector(ode.u_in, res.gamma, res.N);

  PropagationConfig cfg;
  cfg.K = knobs.K;
  cfg.T = T;
  cfg.dt = knobs.dt;
  cfg.steps = knobs.steps;
  cfg.strict_stability = knobs.strict_stability;
  cfg.output_intervals = knobs.samples - 1;
  const Propagation<double> prop = evolve(mat, y0.data, cfg);
  res.plan = prop.plan;

  const Trajectory<double> ref = reference_solve(ode, T, knobs.tol, knobs.samples);
  require(ref.times.size() == prop.times.size(), "pipeline: sample grids disagree");

  for (std::size_t i = 0; i < prop.norm_history.size(); ++i) {
    res.max_y_norm = std::max(res.max_y_norm, prop.norm_history[i]);
    if (i > 0 && prop.norm_history[i] > prop.norm_history[i - 1] * (1.0 + 1e-12))
      res.norm_monotone = false;
  }
  if (prop.plan.steps > 0) {
    const double x = res.norm_bound * prop.plan.dt;
    res.taylor_defect = double(prop.plan.steps) * std::pow(x, knobs.K + 1) /
                        std::tgamma(double(knobs.K) + 2.0) * res.max_y_norm;
  }

  const bool bounded = res.R < 1.0;
  for (std::size_t i = 0; i < prop.times.size(); ++i) {
    PipelineSample smp;
    smp.t = prop.times[i];
    const auto [block, share] = extract_block(mat.layout(), prop.states[i], 1);
    smp.u_hat = res.gamma * block;
    smp.u_ref = ref.states[i];
    smp.y_norm = prop.states[i].norm();
    smp.block1_norm = block.norm();
    smp.share1 = share;
    smp.error = (smp.u_hat - smp.u_ref).norm();
    smp.eta1 = smp.error / res.gamma;
    smp.component_bound =
        bounded ? component_error_bound(s, res.gamma, res.N, 1, smp.t)
                : std::numeric_limits<double>::infinity();
    res.samples.push_back(std::move(smp));
  }
  return res;
}

}  // namespace carleman
