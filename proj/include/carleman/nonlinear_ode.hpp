#pragma once

#include "carleman/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace carleman {

inline constexpr Index kDefaultKronCap = 10'000'000;

/// du/dt = F1 u + FM u^{⊗M} with u(0) = u_in on [0, T].
///
/// FM is an n × n^M row-major sparse matrix; its column space is never
/// materialised, only addressed by index.
template <typename Scalar>
struct NonlinearOde {
  Index n = 0;
  int M = 2;
  SparseMatrix<Scalar> F1;
  SparseMatrix<Scalar> FM;
  Vector<Scalar> u_in;
  Scalar T = 0;
};

using NonlinearOded = NonlinearOde<double>;

template <typename Scalar>
void validate(const NonlinearOde<Scalar>& ode) {
  require(ode.n >= 1, "ode: dimension n must be >= 1");
  require(ode.M >= 2, "ode: nonlinearity order M must be >= 2");
  require(ode.F1.rows() == ode.n && ode.F1.cols() == ode.n, "ode: F1 must be n x n");
  require(ode.FM.rows() == ode.n && ode.FM.cols() == checked_pow(ode.n, ode.M),
          "ode: FM must be n x n^M");
  require(ode.u_in.size() == ode.n, "ode: u_in must have length n");
  require(std::isfinite(double(ode.T)) && ode.T >= Scalar(0), "ode: T must be finite and >= 0");
  auto finite = [](const SparseMatrix<Scalar>& a) {
    for (Index r = 0; r < a.outerSize(); ++r)
      for (typename SparseMatrix<Scalar>::InnerIterator it(a, r); it; ++it)
        if (!std::isfinite(double(it.value()))) return false;
    return true;
  };
  require(finite(ode.F1) && finite(ode.FM) && ode.u_in.allFinite(),
          "ode: non-finite coefficient or initial value");
}

/// Builds and validates an ODE from a dense F1 and FM coordinate triplets
/// (row, column into u^{⊗M}, value), both 0-based.
template <typename Scalar>
NonlinearOde<Scalar> make_ode(const Matrix<Scalar>& F1, int M,
                              const std::vector<Eigen::Triplet<Scalar, Index>>& fm,
                              Vector<Scalar> u_in, Scalar T) {
  NonlinearOde<Scalar> ode;
  ode.n = F1.rows();
  ode.M = M;
  require(F1.rows() == F1.cols(), "ode: F1 must be square");
  require(M >= 2, "ode: nonlinearity order M must be >= 2");
  ode.F1 = F1.sparseView();
  const Index cols = checked_pow(ode.n, M);
  for (const auto& t : fm)
    require(t.row() >= 0 && t.row() < ode.n && t.col() >= 0 && t.col() < cols,
            "ode: FM triplet out of range");
  ode.FM.resize(ode.n, cols);
  ode.FM.setFromTriplets(fm.begin(), fm.end());
  ode.u_in = std::move(u_in);
  ode.T = T;
  validate(ode);
  return ode;
}

/// Maximum eigenvalue of (F1 + F1ᵀ)/2.
template <typename Scalar>
Scalar lambda0(const SparseMatrix<Scalar>& F1) {
  require(F1.rows() == F1.cols(), "lambda0: F1 must be square");
  const Index n = F1.rows();
  if (n <= 2048) {
    const Matrix<Scalar> dense(F1);
    require(dense.allFinite(), "lambda0: non-finite entries");
    const Matrix<Scalar> sym = (dense + dense.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("lambda0: eigensolver failed");
    return es.eigenvalues()(n - 1);
  }
  // Shifted power iteration on S + σI, σ a Gershgorin radius making it PSD.
  const SparseMatrix<Scalar> sym = (SparseMatrix<Scalar>(F1.transpose()) + F1) / Scalar(2);
  Scalar sigma = 0;
  for (Index r = 0; r < n; ++r) {
    Scalar s = 0;
    for (typename SparseMatrix<Scalar>::InnerIterator it(sym, r); it; ++it) s += std::abs(it.value());
    sigma = std::max(sigma, s);
  }
  Vector<Scalar> v = Vector<Scalar>::Ones(n);
  for (Index i = 0; i < n; ++i) v(i) += Scalar(1e-3) * Scalar(i % 11);
  v.normalize();
  Scalar rq = 0;
  for (int it = 0; it < 200000; ++it) {
    Vector<Scalar> w = sym * v + sigma * v;
    const Scalar next = v.dot(w);
    const Scalar nw = w.norm();
    if (nw == Scalar(0)) return -sigma;
    v = w / nw;
    if (it > 0 && std::abs(next - rq) <= Scalar(1e-14) * std::max(Scalar(1), std::abs(next)))
      return next - sigma;
    rq = next;
  }
  throw NumericError("lambda0: power iteration did not converge");
}

/// Spectral norm of FM. Exact when every column holds at most one nonzero
/// (then FM FMᵀ is diagonal); otherwise power iteration on FM FMᵀ.
template <typename Scalar>
Scalar fm_norm(const SparseMatrix<Scalar>& FM) {
  if (FM.nonZeros() == 0) return Scalar(0);
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(FM.nonZeros()));
  Scalar best = 0;
  for (Index r = 0; r < FM.outerSize(); ++r) {
    Scalar row = 0;
    for (typename SparseMatrix<Scalar>::InnerIterator it(FM, r); it; ++it) {
      cols.push_back(it.col());
      row += it.value() * it.value();
    }
    best = std::max(best, row);
  }
  std::sort(cols.begin(), cols.end());
  if (std::adjacent_find(cols.begin(), cols.end()) == cols.end()) return std::sqrt(best);
  return power_iteration_norm(FM, Scalar(1e-12), 10000);
}

/// Spectral norm of F1: dense SVD for n ≤ 512, power iteration otherwise.
template <typename Scalar>
Scalar f1_norm(const SparseMatrix<Scalar>& F1) {
  if (F1.rows() <= 512) return dense_spectral_norm(Matrix<Scalar>(F1));
  return power_iteration_norm(F1, Scalar(1e-10), 10000);
}

/// R = ‖FM‖ ‖u_in‖^{M-1} / |λ_0|. Throws ValidationError unless λ_0 < 0.
template <typename Scalar>
Scalar r_ratio(const NonlinearOde<Scalar>& ode) {
  const Scalar l0 = lambda0(ode.F1);
  if (!(l0 < Scalar(0)))
    throw ValidationError("not dissipative: lambda0 = " + std::to_string(double(l0)) + " >= 0");
  return fm_norm(ode.FM) * std::pow(ode.u_in.norm(), Scalar(ode.M - 1)) / std::abs(l0);
}

/// The system in ũ = u/γ: F̃1 = F1, F̃M = γ^{M-1} FM, ũ_in = u_in/γ.
template <typename Scalar>
struct RescaledOde {
  NonlinearOde<Scalar> base;
  Scalar gamma = 1;

  Scalar fm_scale() const { return std::pow(gamma, Scalar(base.M - 1)); }
  Vector<Scalar> u_tilde_in() const { return base.u_in / gamma; }

  /// The rescaled system as a plain ODE in ũ.
  NonlinearOde<Scalar> as_ode() const {
    NonlinearOde<Scalar> out = base;
    out.FM *= fm_scale();
    out.u_in = u_tilde_in();
    return out;
  }
};

template <typename Scalar>
RescaledOde<Scalar> rescale(const NonlinearOde<Scalar>& ode, Scalar gamma) {
  require(std::isfinite(double(gamma)) && gamma > Scalar(0), "rescale: gamma must be > 0");
  return RescaledOde<Scalar>{ode, gamma};
}

template <typename Scalar>
struct GammaLimit {
  Scalar value = 0;
  bool unbounded = false;  // ‖FM‖ = 0: any γ is stable
};

/// γ_max = (|λ_0| / ‖FM‖)^{1/(M-1)}.
template <typename Scalar>
GammaLimit<Scalar> max_stable_gamma(const NonlinearOde<Scalar>& ode) {
  const Scalar l0 = lambda0(ode.F1);
  require(l0 < Scalar(0), "max_stable_gamma: not dissipative (lambda0 >= 0)");
  const Scalar fm = fm_norm(ode.FM);
  if (fm == Scalar(0)) return {std::numeric_limits<Scalar>::infinity(), true};
  return {std::pow(std::abs(l0) / fm, Scalar(1) / Scalar(ode.M - 1)), false};
}

/// u^{⊗j} in lexicographic order (leftmost factor slowest).
template <typename Scalar>
Vector<Scalar> kron_power(const Vector<Scalar>& u, int j, Index cap = kDefaultKronCap) {
  require(j >= 1, "kron_power: j must be >= 1");
  const Index total = checked_pow(u.size(), j);
  require(total <= cap, "kron_power: n^j = " + std::to_string(total) + " exceeds cap " +
                            std::to_string(cap));
  Vector<Scalar> out = u;
  for (int level = 2; level <= j; ++level) {
    Vector<Scalar> next(out.size() * u.size());
    for (Index a = 0; a < out.size(); ++a) next.segment(a * u.size(), u.size()) = out(a) * u;
    out.swap(next);
  }
  return out;
}

/// FM u^{⊗M} without forming u^{⊗M}: each column index is decoded into its
/// base-n digits, which select the factors of the monomial.
template <typename Scalar>
Vector<Scalar> apply_nonlinearity(const SparseMatrix<Scalar>& FM, int M, const Vector<Scalar>& u) {
  const Index n = u.size();
  Vector<Scalar> out = Vector<Scalar>::Zero(FM.rows());
  for (Index r = 0; r < FM.outerSize(); ++r) {
    Scalar acc = 0;
    for (typename SparseMatrix<Scalar>::InnerIterator it(FM, r); it; ++it) {
      Index col = it.col();
      Scalar prod = it.value();
      for (int q = 0; q < M; ++q) {
        prod *= u(col % n);
        col /= n;
      }
      acc += prod;
    }
    out(r) = acc;
  }
  return out;
}

template <typename Scalar>
Vector<Scalar> ode_rhs(const NonlinearOde<Scalar>& ode, const Vector<Scalar>& u) {
  return ode.F1 * u + apply_nonlinearity(ode.FM, ode.M, u);
}

template <typename Scalar>
struct Trajectory {
  std::vector<Scalar> times;
  std::vector<Vector<Scalar>> states;
  Index accepted_steps = 0;
  Index rejected_steps = 0;
};

/// Dormand–Prince 5(4) with error per component scaled by tol·(1 + |u|).
/// Steps are clamped to land on the uniform output times exactly.
template <typename Scalar>
Trajectory<Scalar> reference_solve(const NonlinearOde<Scalar>& ode, Scalar T, Scalar tol = 1e-10,
                                   int n_out = 101) {
  validate(ode);
  require(tol >= Scalar(1e-13) && tol <= Scalar(1e-6), "reference_solve: tol must be in [1e-13, 1e-6]");
  require(T >= Scalar(0) && std::isfinite(double(T)), "reference_solve: T must be finite and >= 0");
  require(n_out >= 2, "reference_solve: need at least two output times");

  constexpr Scalar a21 = Scalar(1) / 5;
  constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                   a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
  constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33, a63 = Scalar(46732) / 5247,
                   a64 = Scalar(49) / 176, a65 = Scalar(-5103) / 18656;
  constexpr Scalar b1 = Scalar(35) / 384, b3 = Scalar(500) / 1113, b4 = Scalar(125) / 192,
                   b5 = Scalar(-2187) / 6784, b6 = Scalar(11) / 84;
  constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                   e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;

  Trajectory<Scalar> traj;
  Vector<Scalar> u = ode.u_in;
  traj.times.push_back(0);
  traj.states.push_back(u);
  if (T == Scalar(0)) return traj;

  auto f = [&](const Vector<Scalar>& x) { return ode_rhs(ode, x); };
  Vector<Scalar> k1 = f(u);
  Scalar t = 0;
  Scalar h = std::min(T / Scalar(n_out - 1), Scalar(1e-3) * std::max(Scalar(1), T));
  for (int out = 1; out < n_out; ++out) {
    const Scalar target = T * Scalar(out) / Scalar(n_out - 1);
    while (t < target) {
      bool last = false;
      Scalar step = h;
      if (t + step >= target) {
        step = target - t;
        last = true;
      }
      if (step < Scalar(1e-14) * std::max(Scalar(1), std::abs(t)))
        throw NumericError("reference_solve: step size underflow at t = " + std::to_string(double(t)) +
                           " (problem too stiff for explicit integration)");
      const Vector<Scalar> k2 = f(u + step * a21 * k1);
      const Vector<Scalar> k3 = f(u + step * (a31 * k1 + a32 * k2));
      const Vector<Scalar> k4 = f(u + step * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vector<Scalar> k5 = f(u + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vector<Scalar> k6 = f(u + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      Vector<Scalar> next = u + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vector<Scalar> k7 = f(next);
      const Vector<Scalar> err =
          step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      Scalar ratio = 0;
      for (Index i = 0; i < u.size(); ++i) {
        const Scalar sc = tol * (Scalar(1) + std::max(std::abs(u(i)), std::abs(next(i))));
        ratio = std::max(ratio, std::abs(err(i)) / sc);
      }
      if (!std::isfinite(double(ratio)) || !next.allFinite()) {
        h = step / Scalar(4);
        ++traj.rejected_steps;
        continue;
      }
      const Scalar factor =
          std::clamp(Scalar(0.9) * std::pow(std::max(ratio, Scalar(1e-12)), Scalar(-0.2)),
                     Scalar(0.2), Scalar(5));
      if (ratio <= Scalar(1)) {
        t = last ? target : t + step;
        u.swap(next);
        k1 = k7;
        ++traj.accepted_steps;
        // A clamped final step says nothing about the natural step size.
        if (!last || factor < Scalar(1)) h = step * factor;
      } else {
        h = step * std::min(factor, Scalar(1));
        ++traj.rejected_steps;
      }
    }
    traj.times.push_back(target);
    traj.states.push_back(u);
  }
  return traj;
}

}  // namespace carleman
