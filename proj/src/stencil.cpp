#include "carleman/stencil.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>

namespace carleman {

namespace {

Rational factorial(int n) {
  Rational r(1);
  for (int i = 2; i <= n; ++i) r *= Rational(i);
  return r;
}

}  // namespace

Rational StencilTable::periodic_row_sum() const {
  Rational s = coefficients.at(0);
  for (std::size_t j = 1; j < coefficients.size(); ++j) s += Rational(2) * coefficients[j];
  return s;
}

Rational StencilTable::lcu_weight() const {
  Rational s;
  for (const Rational& a : coefficients) s += a.abs();
  return s;
}

Rational StencilTable::abs_row_sum() const {
  Rational s = coefficients.at(0).abs();
  for (std::size_t j = 1; j < coefficients.size(); ++j) s += Rational(2) * coefficients[j].abs();
  return s;
}

StencilTable stencil_coefficients(int k) {
  require(k >= 1 && k <= kMaxStencilOrder,
          "stencil order must be in [1, " + std::to_string(kMaxStencilOrder) +
              "], got " + std::to_string(k));
  StencilTable table;
  table.order = k;
  table.coefficients.resize(static_cast<std::size_t>(k) + 1);
  const Rational kfact = factorial(k);
  Rational sum;
  for (int j = 1; j <= k; ++j) {
    const Rational sign = (j % 2 == 1) ? Rational(2) : Rational(-2);
    const Rational a =
        sign * kfact * kfact / (Rational(j * j) * factorial(k - j) * factorial(k + j));
    table.coefficients[static_cast<std::size_t>(j)] = a;
    sum += a;
  }
  table.coefficients[0] = Rational(-2) * sum;
  return table;
}

std::vector<Rational> finite_difference_weights(std::span<const int> offsets, int derivative) {
  const int n = static_cast<int>(offsets.size());
  require(derivative >= 0 && n > derivative,
          "finite difference weights: need more nodes than the derivative order");
  const int md = derivative;
  std::vector<std::vector<Rational>> c(static_cast<std::size_t>(n),
                                       std::vector<Rational>(static_cast<std::size_t>(md) + 1));
  auto at = [&](int i, int k) -> Rational& {
    return c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  };
  Rational c1(1);
  Rational c4(offsets[0]);
  at(0, 0) = Rational(1);
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, md);
    Rational c2(1);
    const Rational c5 = c4;
    c4 = Rational(offsets[static_cast<std::size_t>(i)]);
    for (int j = 0; j < i; ++j) {
      const Rational c3(offsets[static_cast<std::size_t>(i)] - offsets[static_cast<std::size_t>(j)]);
      require(c3 != Rational(0), "finite difference weights: repeated node");
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          at(i, k) = c1 * (Rational(k) * at(i - 1, k - 1) - c5 * at(i - 1, k)) / c2;
        at(i, 0) = -c1 * c5 * at(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k) at(j, k) = (c4 * at(j, k) - Rational(k) * at(j, k - 1)) / c3;
      at(j, 0) = c4 * at(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<Rational> w(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] = at(j, md);
  return w;
}

std::string to_string(Boundary bc) { return bc == Boundary::periodic ? "periodic" : "dirichlet"; }

namespace {

// Unscaled circulant symbol a_0 + 2Σ a_j cos(2πℓj/m).
std::vector<double> circulant_symbol(const StencilTable& table, Index m) {
  const Vector<double> a = table.values<double>();
  std::vector<double> lam(static_cast<std::size_t>(m));
  for (Index l = 0; l < m; ++l) {
    double s = a(0);
    for (int j = 1; j <= table.order; ++j)
      s += 2.0 * a(j) * std::cos(2.0 * std::numbers::pi * double(l) * double(j) / double(m));
    lam[static_cast<std::size_t>(l)] = s;
  }
  lam[0] = 0.0;  // exact by the null row sum
  return lam;
}

}  // namespace

std::vector<double> laplacian_eigenvalues_periodic(int k, Index m) {
  const StencilTable table = stencil_coefficients(k);
  require(m >= 2, "laplacian eigenvalues: need m >= 2");
  std::vector<double> lam = circulant_symbol(table, m);
  const double scale = double(m) * double(m);
  for (double& v : lam) v *= scale;
  return lam;
}

double laplacian_norm_bound(int k, Index m, int d) {
  require(d >= 1, "laplacian norm bound: d must be >= 1");
  const StencilTable table = stencil_coefficients(k);
  const double m2 = double(m) * double(m);
  const double by_coefficients = m2 * table.abs_row_sum().to<double>();
  const double asymptotic = m2 * 4.0 * std::numbers::pi * std::numbers::pi / 3.0;
  return std::min(by_coefficients, asymptotic);
}

GKappaCurve g_kappa(int k, double tau_max, int n_tau, Index m) {
  require(tau_max > 0.0, "g_kappa: tau_max must be positive");
  require(n_tau >= 200, "g_kappa: need at least 200 grid intervals");
  const StencilTable table = stencil_coefficients(k);
  require(m >= 2 * k + 1, "g_kappa: need m >= 2k+1");
  const std::vector<double> lam = circulant_symbol(table, m);

  // exp(τC) is circulant; its first row is the inverse DFT of exp(τλ).
  // The symbol is even in ℓ, so only cosines survive.
  const auto mm = static_cast<std::size_t>(m);
  std::vector<double> cos_table(mm * mm);
  for (std::size_t l = 0; l < mm; ++l)
    for (std::size_t p = 0; p < mm; ++p)
      cos_table[l * mm + p] =
          std::cos(2.0 * std::numbers::pi * double((l * p) % mm) / double(m));

  GKappaCurve curve;
  curve.tau.reserve(static_cast<std::size_t>(n_tau) + 1);
  curve.inf_norm.reserve(static_cast<std::size_t>(n_tau) + 1);
  std::vector<double> e(mm);
  std::vector<double> row(mm);
  for (int s = 0; s <= n_tau; ++s) {
    const double tau = tau_max * double(s) / double(n_tau);
    for (std::size_t l = 0; l < mm; ++l) e[l] = std::exp(tau * lam[l]);
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t l = 0; l < mm; ++l) {
      const double el = e[l];
      const double* cl = &cos_table[l * mm];
      for (std::size_t p = 0; p < mm; ++p) row[p] += el * cl[p];
    }
    double norm = 0.0;
    for (double v : row) norm += std::abs(v);
    norm /= double(m);
    if (!std::isfinite(norm)) throw NumericError("g_kappa: non-finite exponential norm");
    curve.tau.push_back(tau);
    curve.inf_norm.push_back(norm);
    if (norm > curve.value || s == 0) {
      curve.value = norm;
      curve.argmax = tau;
    }
  }
  return curve;
}

double inf_norm_initial_slope(int k, Index m, double tau) {
  const LaplacianOperatord lap = build_laplacian_1d(k, m, Boundary::periodic);
  const double m2 = double(m) * double(m);
  Matrix<double> op = Matrix<double>::Identity(m, m) + (tau / m2) * lap.dense();
  const double norm = op.cwiseAbs().rowwise().sum().maxCoeff();
  return (norm - 1.0) / tau;
}

std::vector<ConvergenceRow> convergence_study(std::span<const int> k_list,
                                              std::span<const Index> m_list) {
  std::vector<ConvergenceRow> rows;
  for (int k : k_list) {
    for (Index m : m_list) {
      const LaplacianOperatord lap = build_laplacian_1d(k, m, Boundary::dirichlet);
      Vector<double> x(m);
      for (Index i = 0; i < m; ++i) x(i) = double(i + 1) * lap.spacing();
      // u(0) = 0, u(1) = 1 moved to the right-hand side.
      const Vector<double> rhs = x.array().exp().matrix() - lap.right_coupling();
      Eigen::SparseMatrix<double> a = lap.axis_matrix();
      a.makeCompressed();
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
      if (lu.info() != Eigen::Success) throw NumericError("convergence study: singular operator");
      const Vector<double> u = lu.solve(rhs);
      const Vector<double> exact =
          (x.array().exp() + (2.0 - std::numbers::e) * x.array() - 1.0).matrix();
      const Vector<double> diff = u - exact;
      rows.push_back({k, m, diff.cwiseAbs().maxCoeff(), diff.norm()});
    }
  }
  return rows;
}

double fitted_log_slope(std::span<const double> m, std::span<const double> err) {
  require(m.size() == err.size() && m.size() >= 2, "fitted slope: need >= 2 matching points");
  const auto n = static_cast<double>(m.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double lx = std::log(m[i]);
    const double ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace carleman
