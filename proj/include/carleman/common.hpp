#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace carleman {

using Index = std::int64_t;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Row-major with 64-bit indices: F_M has n^M columns.
template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>;

/// Input violates a documented precondition. Maps to CLI exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to converge or produced non-finite values.
/// Maps to CLI exit status 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

/// base^exp with overflow detection.
inline Index checked_pow(Index base, int exp) {
  Index r = 1;
  for (int i = 0; i < exp; ++i) {
    if (__builtin_mul_overflow(r, base, &r))
      throw ValidationError("integer overflow in " + std::to_string(base) + "^" +
                            std::to_string(exp));
  }
  return r;
}

/// Applies (I_left ⊗ op ⊗ I_right) to x and accumulates scale * result into out.
///
/// x has length left * op.cols() * right, out has length left * op.rows() * right.
/// Kronecker ordering is lexicographic: the leftmost factor varies slowest.
template <typename Scalar, typename InVec, typename OutVec>
void apply_kron_factor(const SparseMatrix<Scalar>& op, const InVec& x, Index left,
                       Index right, Scalar scale, OutVec& out) {
  const Index rows = op.rows();
  const Index cols = op.cols();
  for (Index l = 0; l < left; ++l) {
    for (Index r = 0; r < rows; ++r) {
      Scalar* dst = out.data() + (l * rows + r) * right;
      for (typename SparseMatrix<Scalar>::InnerIterator it(op, r); it; ++it) {
        const Scalar v = scale * it.value();
        const Scalar* src = x.data() + (l * cols + it.col()) * right;
        for (Index q = 0; q < right; ++q) dst[q] += v * src[q];
      }
    }
  }
}

/// Largest singular value of a dense matrix.
template <typename Derived>
typename Derived::RealScalar dense_spectral_norm(const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Derived::RealScalar;
  if (a.size() == 0) return Real(0);
  Eigen::JacobiSVD<Matrix<typename Derived::Scalar>> svd(a.eval());
  return svd.singularValues()(0);
}

/// Spectral norm by power iteration on A Aᵀ (applied as A(Aᵀx)).
template <typename Scalar>
Scalar power_iteration_norm(const SparseMatrix<Scalar>& a, Scalar tol = Scalar(1e-12),
                            int max_iter = 10000) {
  if (a.rows() == 0 || a.nonZeros() == 0) return Scalar(0);
  Vector<Scalar> v = Vector<Scalar>::Ones(a.rows());
  // Deterministic non-symmetric start avoids landing in a null space by symmetry.
  for (Index i = 0; i < v.size(); ++i) v(i) += Scalar(1e-3) * Scalar(i % 7);
  v.normalize();
  Scalar est = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vector<Scalar> w = a * (a.transpose() * v);
    const Scalar nw = w.norm();
    if (nw == Scalar(0)) return Scalar(0);
    v = w / nw;
    if (std::abs(nw - est) <= tol * nw) return std::sqrt(nw);
    est = nw;
  }
  return std::sqrt(est);
}

}  // namespace carleman
