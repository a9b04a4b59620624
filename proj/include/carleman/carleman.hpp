#pragma once

#include "carleman/common.hpp"
#include "carleman/nonlinear_ode.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace carleman {

/// Block offsets of a level-stacked vector y = (y_1, ..., y_N), |y_j| = n^j.
struct CarlemanLayout {
  Index n = 0;
  int N = 0;
  std::vector<Index> offsets;  // offsets[j-1] = start of block j; offsets[N] = total

  CarlemanLayout() = default;
  CarlemanLayout(Index n_, int N_) : n(n_), N(N_) {
    require(n >= 1, "carleman layout: n must be >= 1");
    require(N >= 1, "carleman layout: N must be >= 1");
    offsets.assign(static_cast<std::size_t>(N) + 1, 0);
    Index block = 1;
    for (int j = 1; j <= N; ++j) {
      block = checked_pow(n, j);
      Index next;
      if (__builtin_add_overflow(offsets[static_cast<std::size_t>(j - 1)], block, &next))
        throw ValidationError("carleman layout: total dimension overflows");
      offsets[static_cast<std::size_t>(j)] = next;
    }
  }

  Index total() const { return offsets.back(); }
  Index offset(int j) const { return offsets.at(static_cast<std::size_t>(j - 1)); }
  Index size(int j) const { return offset(j + 1) - offset(j); }

  /// Index in the padded register layout (level register ⊗ N data registers,
  /// block j occupying the leading j registers) of the flat position inside block j.
  Index padded_index(int j, Index flat) const {
    require(j >= 1 && j <= N, "padded_index: level out of range");
    require(flat >= 0 && flat < size(j), "padded_index: position out of range");
    return Index(j - 1) * checked_pow(n, N) + flat * checked_pow(n, N - j);
  }
};

/// y with its layout. ‖y‖² = Σ_j ‖y_j‖².
template <typename Scalar>
struct CarlemanVector {
  CarlemanLayout layout;
  Vector<Scalar> data;

  auto block(int j) { return data.segment(layout.offset(j), layout.size(j)); }
  auto block(int j) const { return data.segment(layout.offset(j), layout.size(j)); }
};

/// y(0) with block j = (u_in/γ)^{⊗j}.
template <typename Scalar>
CarlemanVector<Scalar> initial_vector(const Vector<Scalar>& u_in, Scalar gamma, int N) {
  require(gamma > Scalar(0), "initial_vector: gamma must be > 0");
  CarlemanVector<Scalar> y{CarlemanLayout(u_in.size(), N), {}};
  y.data.resize(y.layout.total());
  const Vector<Scalar> u = u_in / gamma;
  y.block(1) = u;
  for (int j = 2; j <= N; ++j) {
    const Index prev = y.layout.size(j - 1);
    const Index dst = y.layout.offset(j);
    const Index src = y.layout.offset(j - 1);
    for (Index a = 0; a < prev; ++a) y.data.segment(dst + a * u.size(), u.size()) = y.data(src + a) * u;
  }
  return y;
}

struct AssembleOptions {
  /// Permit N ≤ M. The truncated system is still well defined there, but the
  /// off-diagonal coupling vanishes for small N.
  bool allow_low_order = false;
};

/// N·λ_F1 + (N−M+1)·γ^{M−1}·λ_FM.
inline double lambda_value(int N, int M, double gamma, double lambda_f1, double lambda_fm) {
  const double coupled = std::max(0, N - M + 1);
  return double(N) * lambda_f1 + coupled * std::pow(gamma, double(M - 1)) * lambda_fm;
}

/// Truncated, rescaled Carleman matrix Ã_N held by reference to F1 and FM.
///
/// Block row j has A_j^{(1)} = Σ_i I^{⊗(i−1)} ⊗ F1 ⊗ I^{⊗(j−i)} on the diagonal
/// and γ^{M−1} A^{(M)}_{j+M−1} at block column j+M−1 whenever j+M−1 ≤ N.
template <typename Scalar>
class CarlemanMatrix {
 public:
  CarlemanMatrix(RescaledOde<Scalar> rescaled, int N, AssembleOptions opts = {})
      : ode_(std::move(rescaled)), layout_() {
    validate(ode_.base);
    require(N >= 1, "carleman: N must be >= 1");
    require(opts.allow_low_order || N > ode_.base.M,
            "carleman: truncation order N = " + std::to_string(N) +
                " must exceed M = " + std::to_string(ode_.base.M));
    layout_ = CarlemanLayout(ode_.base.n, N);
    fm_scale_ = ode_.fm_scale();
  }

  Index n() const { return ode_.base.n; }
  int M() const { return ode_.base.M; }
  int N() const { return layout_.N; }
  Scalar gamma() const { return ode_.gamma; }
  Index total_size() const { return layout_.total(); }
  const CarlemanLayout& layout() const { return layout_; }
  const RescaledOde<Scalar>& rescaled() const { return ode_; }

  Scalar lambda0() const {
    if (!lambda0_) lambda0_ = carleman::lambda0(ode_.base.F1);
    return *lambda0_;
  }
  Scalar f1_norm() const {
    if (!f1_norm_) f1_norm_ = carleman::f1_norm(ode_.base.F1);
    return *f1_norm_;
  }
  Scalar fm_norm() const {
    if (!fm_norm_) fm_norm_ = carleman::fm_norm(ode_.base.FM);
    return *fm_norm_;
  }

  /// out = Ã_N y, one Kronecker factor at a time.
  void apply(const Vector<Scalar>& y, Vector<Scalar>& out) const {
    require(y.size() == total_size(), "carleman apply: dimension mismatch");
    out.setZero(total_size());
    const Index n = this->n();
    const int N = this->N();
    const int M = this->M();
    for (int j = 1; j <= N; ++j) {
      auto dst = out.segment(layout_.offset(j), layout_.size(j));
      const auto src = y.segment(layout_.offset(j), layout_.size(j));
      for (int i = 1; i <= j; ++i)
        apply_kron_factor(ode_.base.F1, src, checked_pow(n, i - 1), checked_pow(n, j - i),
                          Scalar(1), dst);
      const int jc = j + M - 1;
      if (jc <= N && ode_.base.FM.nonZeros() > 0) {
        const auto hi = y.segment(layout_.offset(jc), layout_.size(jc));
        for (int i = 1; i <= j; ++i)
          apply_kron_factor(ode_.base.FM, hi, checked_pow(n, i - 1), checked_pow(n, j - i),
                            fm_scale_, dst);
      }
    }
  }

  Vector<Scalar> apply(const Vector<Scalar>& y) const {
    Vector<Scalar> out;
    apply(y, out);
    return out;
  }

  /// Sparse Ã_N built independently of apply() from explicit Kronecker products.
  SparseMatrix<Scalar> to_sparse() const {
    using ColSparse = Eigen::SparseMatrix<Scalar>;
    const Index n = this->n();
    const int N = this->N();
    const int M = this->M();
    const ColSparse f1(ode_.base.F1);
    const ColSparse fm(ode_.base.FM);
    auto identity = [](Index size) {
      ColSparse id(size, size);
      id.setIdentity();
      return id;
    };
    auto kron_sum = [&](const ColSparse& op, int j) {
      ColSparse acc(checked_pow(n, j), op.cols() * checked_pow(n, j - 1));
      for (int i = 1; i <= j; ++i) {
        ColSparse left = Eigen::kroneckerProduct(identity(checked_pow(n, i - 1)), op).eval();
        ColSparse term = Eigen::kroneckerProduct(left, identity(checked_pow(n, j - i))).eval();
        acc += term;
      }
      return acc;
    };
    std::vector<Eigen::Triplet<Scalar, Index>> trip;
    auto scatter = [&](const ColSparse& blk, Index r0, Index c0, Scalar scale) {
      for (Index c = 0; c < blk.outerSize(); ++c)
        for (typename ColSparse::InnerIterator it(blk, c); it; ++it)
          trip.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
    };
    for (int j = 1; j <= N; ++j) {
      scatter(kron_sum(f1, j), layout_.offset(j), layout_.offset(j), Scalar(1));
      const int jc = j + M - 1;
      if (jc <= N) scatter(kron_sum(fm, j), layout_.offset(j), layout_.offset(jc), fm_scale_);
    }
    SparseMatrix<Scalar> a(total_size(), total_size());
    a.setFromTriplets(trip.begin(), trip.end());
    a.prune(Scalar(0), Scalar(0));
    return a;
  }

  Matrix<Scalar> to_dense(Index cap = 4096) const {
    require(total_size() <= cap, "carleman dense: N_tot = " + std::to_string(total_size()) +
                                     " exceeds cap " + std::to_string(cap));
    return Matrix<Scalar>(to_sparse());
  }

  /// Block Gershgorin bound on the largest eigenvalue of (Ã_N + Ã_Nᵀ)/2.
  Scalar gershgorin_max_eig_bound() const {
    const int N = this->N();
    const int M = this->M();
    const Scalar coupling = fm_scale_ * fm_norm() / Scalar(2);
    Scalar best = -std::numeric_limits<Scalar>::infinity();
    for (int j = 1; j <= N; ++j) {
      Scalar radius = 0;
      if (j + M - 1 <= N) radius += Scalar(j);
      if (j >= M) radius += Scalar(j - M + 1);
      best = std::max(best, Scalar(j) * lambda0() + radius * coupling);
    }
    return best;
  }

  /// N‖F1‖ + (N−M+1)γ^{M−1}‖FM‖.
  Scalar spectral_norm_bound() const {
    const int coupled = std::max(0, N() - M() + 1);
    return Scalar(N()) * f1_norm() + Scalar(coupled) * fm_scale_ * fm_norm();
  }

  Scalar lambda_value(Scalar lambda_f1, Scalar lambda_fm) const {
    return carleman::lambda_value(N(), M(), double(gamma()), double(lambda_f1), double(lambda_fm));
  }

  /// Largest number of structural nonzeros in any row of the assembled matrix.
  Index sparsity_count() const {
    const SparseMatrix<Scalar> a = to_sparse();
    Index best = 0;
    for (Index r = 0; r < a.outerSize(); ++r) {
      Index count = 0;
      for (typename SparseMatrix<Scalar>::InnerIterator it(a, r); it; ++it) ++count;
      best = std::max(best, count);
    }
    return best;
  }

 private:
  RescaledOde<Scalar> ode_;
  CarlemanLayout layout_;
  Scalar fm_scale_ = 1;
  mutable std::optional<Scalar> lambda0_;
  mutable std::optional<Scalar> f1_norm_;
  mutable std::optional<Scalar> fm_norm_;
};

template <typename Scalar>
CarlemanMatrix<Scalar> assemble(const RescaledOde<Scalar>& rescaled, int N, AssembleOptions opts = {}) {
  return CarlemanMatrix<Scalar>(rescaled, N, opts);
}

/// Coordinate-format Matrix Market text for a sparse matrix (1-based indices).
template <typename Scalar>
void write_matrix_market(std::ostream& os, const SparseMatrix<Scalar>& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  os << std::setprecision(17);
  for (Index r = 0; r < a.outerSize(); ++r)
    for (typename SparseMatrix<Scalar>::InnerIterator it(a, r); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << double(it.value()) << '\n';
}

}  // namespace carleman
