#pragma once

#include "carleman/carleman.hpp"
#include "carleman/common.hpp"

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace carleman {

/// One truncated-Taylor step y ← Σ_{ℓ=0}^{K} (Δt A)^ℓ y / ℓ!, evaluated as
/// r ← y + (Δt/ℓ) A r for ℓ = K..1. `apply(x, out)` must write A x into out.
template <typename Scalar, typename ApplyFn>
Vector<Scalar> taylor_step(const ApplyFn& apply, const Vector<Scalar>& y, Scalar dt, int K) {
  require(K >= 1, "taylor_step: K must be >= 1");
  Vector<Scalar> r = y;
  Vector<Scalar> ar(y.size());
  for (int l = K; l >= 1; --l) {
    apply(r, ar);
    r = y + (dt / Scalar(l)) * ar;
  }
  if (!r.allFinite()) throw NumericError("taylor_step: non-finite state");
  return r;
}

struct PropagationConfig {
  int K = 10;
  double T = 0.0;
  /// Explicit step size; when unset the auto rule Δt = 1/‖Ã_N‖-bound applies.
  std::optional<double> dt;
  /// Explicit step count; overrides dt.
  std::optional<Index> steps;
  bool strict_stability = true;
  double blowup_factor = 1e6;
  /// States are recorded at this many equal intervals of [0, T]; the step
  /// count is rounded up to a multiple of it.
  Index output_intervals = 100;
};

struct StepPlan {
  double dt = 0.0;
  Index steps = 0;
};

/// Resolves (Δt, steps) so that Δt·steps = T and steps is a multiple of
/// output_intervals. `norm_bound` feeds the auto rule.
inline StepPlan plan_steps(const PropagationConfig& cfg, double norm_bound) {
  require(cfg.T >= 0.0 && std::isfinite(cfg.T), "propagation: T must be finite and >= 0");
  require(cfg.output_intervals >= 1, "propagation: output_intervals must be >= 1");
  if (cfg.T == 0.0) return {0.0, 0};
  Index steps = 0;
  if (cfg.steps) {
    require(*cfg.steps >= 1, "propagation: steps must be >= 1");
    steps = *cfg.steps;
  } else {
    double dt = 0.0;
    if (cfg.dt) {
      require(*cfg.dt > 0.0, "propagation: dt must be > 0");
      dt = *cfg.dt;
    } else {
      dt = norm_bound > 0.0 ? 1.0 / norm_bound : cfg.T;
      dt = std::max(dt, cfg.T / 1e6);
    }
    steps = static_cast<Index>(std::ceil(cfg.T / dt - 1e-9));
    steps = std::max<Index>(steps, 1);
  }
  const Index q = cfg.output_intervals;
  steps = ((steps + q - 1) / q) * q;
  return {cfg.T / double(steps), steps};
}

template <typename Scalar>
struct Propagation {
  StepPlan plan;
  std::vector<double> times;              // recorded output times
  std::vector<Vector<Scalar>> states;     // Carleman vectors at those times
  std::vector<double> norm_history;       // ‖y‖ after every step, including t=0
};

/// Repeated Taylor steps of Ã_N from y0.
template <typename Scalar>
Propagation<Scalar> evolve(const CarlemanMatrix<Scalar>& mat, const Vector<Scalar>& y0,
                           const PropagationConfig& cfg) {
  require(y0.size() == mat.total_size(), "evolve: initial vector dimension mismatch");
  require(cfg.K >= 1, "evolve: K must be >= 1");
  if (cfg.strict_stability) {
    const double g = double(mat.gershgorin_max_eig_bound());
    if (g > 0.0)
      throw ValidationError("evolve: Gershgorin bound " + std::to_string(g) +
                            " > 0; rescaling gamma is above the stable limit");
  }
  Propagation<Scalar> result;
  const bool need_norm = !cfg.steps && !cfg.dt && cfg.T > 0.0;
  result.plan = plan_steps(cfg, need_norm ? double(mat.spectral_norm_bound()) : 0.0);
  const Index steps = result.plan.steps;
  const Scalar dt = Scalar(result.plan.dt);
  const Index stride = steps == 0 ? 1 : steps / cfg.output_intervals;

  auto apply = [&mat](const Vector<Scalar>& x, Vector<Scalar>& out) { mat.apply(x, out); };
  Vector<Scalar> y = y0;
  const double y0_norm = double(y0.norm());
  result.times.push_back(0.0);
  result.states.push_back(y);
  result.norm_history.reserve(static_cast<std::size_t>(steps) + 1);
  result.norm_history.push_back(y0_norm);
  for (Index s = 1; s <= steps; ++s) {
    y = taylor_step<Scalar>(apply, y, dt, cfg.K);
    const double norm = double(y.norm());
    result.norm_history.push_back(norm);
    if (y0_norm > 0.0 && norm > cfg.blowup_factor * y0_norm)
      throw NumericError("evolve: norm grew by more than " + std::to_string(cfg.blowup_factor) +
                         " at step " + std::to_string(s));
    if (s % stride == 0) {
      result.times.push_back(cfg.T * double(s) / double(steps));
      result.states.push_back(y);
    }
  }
  return result;
}

/// Block j of y and its share ‖y_j‖²/‖y‖².
template <typename Scalar>
std::pair<Vector<Scalar>, Scalar> extract_block(const CarlemanLayout& layout, const Vector<Scalar>& y,
                                                int j) {
  require(j >= 1 && j <= layout.N, "extract_block: level out of range");
  require(y.size() == layout.total(), "extract_block: dimension mismatch");
  Vector<Scalar> block = y.segment(layout.offset(j), layout.size(j));
  const Scalar total = y.squaredNorm();
  const Scalar share = total > Scalar(0) ? block.squaredNorm() / total : Scalar(0);
  return {std::move(block), share};
}

/// (1 − r²)/(1 − r^{2N}) with r = u_norm/γ, computed as 1/Σ_{ℓ<N} r^{2ℓ}
/// so that r = 1 gives exactly 1/N.
inline double success_probability(double u_norm, double gamma, int N) {
  require(gamma > 0.0, "success_probability: gamma must be > 0");
  require(u_norm >= 0.0, "success_probability: norm must be >= 0");
  require(N >= 1, "success_probability: N must be >= 1");
  const double r2 = (u_norm / gamma) * (u_norm / gamma);
  double sum = 0.0;
  double term = 1.0;
  for (int l = 0; l < N; ++l) {
    sum += term;
    term *= r2;
  }
  return 1.0 / sum;
}

}  // namespace carleman
