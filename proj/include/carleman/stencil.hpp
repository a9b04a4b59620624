#pragma once

#include "carleman/common.hpp"
#include "carleman/rational.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace carleman {

/// Central finite-difference weights a_0..a_k for the second derivative on a
/// (2k+1)-point stencil, unscaled (multiply by 1/h²).
struct StencilTable {
  int order = 0;
  std::vector<Rational> coefficients;  // a_0, a_1, ..., a_k

  /// a_0 + 2 Σ_{j≥1} a_j. Zero for every valid table.
  Rational periodic_row_sum() const;
  /// |a_0| + Σ_{j≥1} |a_j|, the weight sum of the linear-combination-of-unitaries form.
  Rational lcu_weight() const;
  /// |a_0| + 2 Σ_{j≥1} |a_j|, the absolute row sum of the circulant.
  Rational abs_row_sum() const;

  template <typename Scalar = double>
  Vector<Scalar> values() const {
    Vector<Scalar> v(coefficients.size());
    for (std::size_t i = 0; i < coefficients.size(); ++i)
      v(static_cast<Index>(i)) = coefficients[i].template to<Scalar>();
    return v;
  }
};

inline constexpr int kMaxStencilOrder = 16;

/// Exact weights a_j = 2(-1)^{j+1}(k!)² / (j²(k-j)!(k+j)!), a_0 = -2Σa_j.
/// Throws ValidationError unless 1 ≤ k ≤ 16.
StencilTable stencil_coefficients(int k);

/// Exact finite-difference weights for the given derivative at offset 0 from
/// integer node offsets (Fornberg's recursion in rational arithmetic).
std::vector<Rational> finite_difference_weights(std::span<const int> offsets, int derivative);

enum class Boundary { periodic, dirichlet };

std::string to_string(Boundary bc);

/// Discretised Laplacian L_{k,d} on the unit cube with m points per axis.
///
/// Periodic grids use x_i = i/m (h = 1/m). Dirichlet grids hold the m interior
/// nodes x_i = i/(m+1), i = 1..m; the two boundary nodes are eliminated and their
/// weights kept in `left_coupling` / `right_coupling` so that
/// (L u)_full = axis_matrix() u + left_coupling u(0) + right_coupling u(1).
template <typename Scalar>
class LaplacianOperator {
 public:
  LaplacianOperator(int order, int dimension, Index points_per_axis, Boundary boundary,
                    Scalar spacing, SparseMatrix<Scalar> axis, Vector<Scalar> left,
                    Vector<Scalar> right)
      : order_(order),
        dimension_(dimension),
        points_(points_per_axis),
        boundary_(boundary),
        spacing_(spacing),
        axis_(std::move(axis)),
        left_(std::move(left)),
        right_(std::move(right)) {
    size_ = checked_pow(points_, dimension_);
  }

  int order() const { return order_; }
  int dimension() const { return dimension_; }
  Index points_per_axis() const { return points_; }
  Boundary boundary() const { return boundary_; }
  Scalar spacing() const { return spacing_; }
  Index size() const { return size_; }

  /// The one-dimensional operator L_k, already scaled by 1/h².
  const SparseMatrix<Scalar>& axis_matrix() const { return axis_; }
  const Vector<Scalar>& left_coupling() const { return left_; }
  const Vector<Scalar>& right_coupling() const { return right_; }

  /// Kronecker-sum matvec; never forms the n×n matrix.
  Vector<Scalar> apply(const Vector<Scalar>& x) const {
    if (x.size() != size_) throw ValidationError("laplacian apply: dimension mismatch");
    Vector<Scalar> out = Vector<Scalar>::Zero(size_);
    for (int mu = 0; mu < dimension_; ++mu) {
      apply_kron_factor(axis_, x, checked_pow(points_, mu),
                        checked_pow(points_, dimension_ - mu - 1), Scalar(1), out);
    }
    return out;
  }

  /// Assembled sparse Kronecker sum Σ_μ I^{⊗μ} ⊗ L_k ⊗ I^{⊗(d-μ-1)}.
  SparseMatrix<Scalar> sparse() const {
    std::vector<Eigen::Triplet<Scalar, Index>> trip;
    trip.reserve(static_cast<std::size_t>(axis_.nonZeros() * (size_ / points_) * dimension_));
    for (int mu = 0; mu < dimension_; ++mu) {
      const Index left = checked_pow(points_, mu);
      const Index right = checked_pow(points_, dimension_ - mu - 1);
      for (Index r = 0; r < axis_.outerSize(); ++r) {
        for (typename SparseMatrix<Scalar>::InnerIterator it(axis_, r); it; ++it) {
          for (Index l = 0; l < left; ++l) {
            for (Index q = 0; q < right; ++q) {
              trip.emplace_back((l * points_ + r) * right + q, (l * points_ + it.col()) * right + q,
                                it.value());
            }
          }
        }
      }
    }
    SparseMatrix<Scalar> s(size_, size_);
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
  }

  Matrix<Scalar> dense(Index cap = 4096) const {
    if (size_ > cap)
      throw ValidationError("laplacian dense: size " + std::to_string(size_) +
                            " exceeds cap " + std::to_string(cap));
    return Matrix<Scalar>(sparse());
  }

 private:
  int order_;
  int dimension_;
  Index points_;
  Index size_ = 0;
  Boundary boundary_;
  Scalar spacing_;
  SparseMatrix<Scalar> axis_;
  Vector<Scalar> left_;
  Vector<Scalar> right_;
};

using LaplacianOperatord = LaplacianOperator<double>;

namespace detail {

template <typename Scalar>
LaplacianOperator<Scalar> periodic_axis(const StencilTable& table, Index m) {
  const int k = table.order;
  const Scalar scale = Scalar(m) * Scalar(m);
  std::vector<Eigen::Triplet<Scalar, Index>> trip;
  const Vector<Scalar> a = table.values<Scalar>();
  for (Index i = 0; i < m; ++i) {
    trip.emplace_back(i, i, scale * a(0));
    for (int j = 1; j <= k; ++j) {
      trip.emplace_back(i, (i + j) % m, scale * a(j));
      trip.emplace_back(i, (i - j + m) % m, scale * a(j));
    }
  }
  SparseMatrix<Scalar> axis(m, m);
  axis.setFromTriplets(trip.begin(), trip.end());
  return LaplacianOperator<Scalar>(k, 1, m, Boundary::periodic, Scalar(1) / Scalar(m),
                                   std::move(axis), Vector<Scalar>(), Vector<Scalar>());
}

// Interior nodes 1..m, boundary nodes 0 and m+1. Rows whose central stencil
// would leave [0, m+1] use the 2k+1 nearest in-domain nodes instead, which is
// a one-sided stencil of accuracy 2k-1.
template <typename Scalar>
LaplacianOperator<Scalar> dirichlet_axis(const StencilTable& table, Index m) {
  const int k = table.order;
  const Scalar h = Scalar(1) / Scalar(m + 1);
  const Scalar scale = Scalar(1) / (h * h);
  std::vector<Eigen::Triplet<Scalar, Index>> trip;
  Vector<Scalar> left = Vector<Scalar>::Zero(m);
  Vector<Scalar> right = Vector<Scalar>::Zero(m);
  const Vector<Scalar> a = table.values<Scalar>();
  for (Index i = 1; i <= m; ++i) {
    const Index start = std::clamp<Index>(i - k, 0, m + 1 - 2 * k);
    std::vector<Scalar> w;
    if (start == i - k) {
      for (int j = -k; j <= k; ++j) w.push_back(a(std::abs(j)));
    } else {
      std::vector<int> offsets;
      for (int q = 0; q <= 2 * k; ++q) offsets.push_back(static_cast<int>(start + q - i));
      for (const Rational& r : finite_difference_weights(offsets, 2)) w.push_back(r.to<Scalar>());
    }
    for (int q = 0; q <= 2 * k; ++q) {
      const Index node = start + q;
      const Scalar v = scale * w[static_cast<std::size_t>(q)];
      if (node == 0)
        left(i - 1) += v;
      else if (node == m + 1)
        right(i - 1) += v;
      else
        trip.emplace_back(i - 1, node - 1, v);
    }
  }
  SparseMatrix<Scalar> axis(m, m);
  axis.setFromTriplets(trip.begin(), trip.end());
  return LaplacianOperator<Scalar>(k, 1, m, Boundary::dirichlet, h, std::move(axis),
                                   std::move(left), std::move(right));
}

}  // namespace detail

template <typename Scalar = double>
LaplacianOperator<Scalar> build_laplacian_1d(int k, Index m, Boundary bc) {
  const StencilTable table = stencil_coefficients(k);
  require(m >= 2 * k + 1, "laplacian: need m >= 2k+1 (m=" + std::to_string(m) +
                              ", k=" + std::to_string(k) + ")");
  return bc == Boundary::periodic ? detail::periodic_axis<Scalar>(table, m)
                                  : detail::dirichlet_axis<Scalar>(table, m);
}

/// Periodic d-dimensional Laplacian as a Kronecker sum of 1-D operators.
template <typename Scalar = double>
LaplacianOperator<Scalar> build_laplacian_dd(int k, int d, Index m) {
  require(d >= 1, "laplacian: dimension must be >= 1");
  LaplacianOperator<Scalar> axis = build_laplacian_1d<Scalar>(k, m, Boundary::periodic);
  return LaplacianOperator<Scalar>(k, d, m, Boundary::periodic, axis.spacing(),
                                   axis.axis_matrix(), Vector<Scalar>(), Vector<Scalar>());
}

/// λ_ℓ = m²[a_0 + 2Σ_j a_j cos(2πℓj/m)], ℓ = 0..m-1. For m < 2k+1 the
/// stencil wraps and coinciding offsets add, as in the assembled circulant.
std::vector<double> laplacian_eigenvalues_periodic(int k, Index m);

/// min(m²(|a_0| + 2Σ|a_j|), m²·4π²/3); dominates ‖L_k‖ for any d (n^{2/d} = m²).
double laplacian_norm_bound(int k, Index m, int d);

struct GKappaCurve {
  double value = 1.0;  // max over the τ grid
  double argmax = 0.0;
  std::vector<double> tau;
  std::vector<double> inf_norm;
};

/// max_τ ‖exp(τ L_k / m²)‖_∞ on a uniform grid of n_tau+1 points in [0, tau_max].
/// Uses the exact circulant spectral form; the m² normalisation makes the
/// result independent of m once the kernel no longer wraps.
GKappaCurve g_kappa(int k, double tau_max = 1.0, int n_tau = 1000, Index m = 128);

/// One-sided derivative of ‖I + τ L_k/m²‖_∞ at τ = 0⁺, by a forward difference.
double inf_norm_initial_slope(int k, Index m = 64, double tau = 1e-7);

struct ConvergenceRow {
  int k = 0;
  Index m = 0;
  double err_max = 0.0;
  double err_2 = 0.0;
};

/// Solves u'' = e^x on (0,1), u(0)=0, u(1)=1 with the Dirichlet operator and
/// compares against u = e^x + (2-e)x - 1 at the interior nodes.
std::vector<ConvergenceRow> convergence_study(std::span<const int> k_list,
                                              std::span<const Index> m_list);

/// Least-squares slope of log(err) against log(m).
double fitted_log_slope(std::span<const double> m, std::span<const double> err);

}  // namespace carleman
