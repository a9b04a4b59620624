#include "carleman/pde.hpp"

#include "carleman/stencil.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace carleman {

double InitialCondition::evaluate(std::span<const double> x) const {
  switch (kind) {
    case Kind::cosine: {
      double prod = 1.0;
      for (double xi : x) prod *= std::cos(2.0 * std::numbers::pi * xi);
      return amplitude * (1.0 + prod);
    }
    case Kind::gaussian: {
      double r2 = 0.0;
      for (double xi : x) {
        double dx = std::abs(xi - center);
        dx = std::min(dx, 1.0 - dx);
        r2 += dx * dx;
      }
      return amplitude * std::exp(-r2 / (2.0 * width * width));
    }
    case Kind::constant:
      return amplitude;
    case Kind::tabulated:
      break;
  }
  throw ValidationError("initial condition: tabulated data has no analytic form");
}

InitialCondition::Kind parse_profile(const std::string& name) {
  if (name == "cosine") return InitialCondition::Kind::cosine;
  if (name == "gaussian") return InitialCondition::Kind::gaussian;
  if (name == "constant") return InitialCondition::Kind::constant;
  if (name == "tabulated") return InitialCondition::Kind::tabulated;
  throw ValidationError("unknown initial-condition profile '" + name + "'");
}

std::string to_string(InitialCondition::Kind kind) {
  switch (kind) {
    case InitialCondition::Kind::cosine:
      return "cosine";
    case InitialCondition::Kind::gaussian:
      return "gaussian";
    case InitialCondition::Kind::constant:
      return "constant";
    case InitialCondition::Kind::tabulated:
      return "tabulated";
  }
  return "unknown";
}

void validate(const ReactionDiffusionProblem& pde) {
  require(std::isfinite(pde.D) && pde.D >= 0.0, "pde: D must be finite and >= 0");
  require(std::isfinite(pde.c) && std::isfinite(pde.b), "pde: c and b must be finite");
  require(pde.M >= 2, "pde: M must be >= 2");
  require(pde.d >= 1, "pde: d must be >= 1");
  require(pde.k >= 1 && pde.k <= kMaxStencilOrder, "pde: stencil order k out of range");
  require(pde.m >= 2 * pde.k + 1, "pde: need m >= 2k+1");
  require(std::isfinite(pde.T) && pde.T >= 0.0, "pde: T must be finite and >= 0");
  if (pde.initial.kind == InitialCondition::Kind::tabulated)
    require(static_cast<Index>(pde.initial.values.size()) == pde.n(),
            "pde: tabulated initial condition must have m^d values");
  if (pde.initial.kind == InitialCondition::Kind::gaussian)
    require(pde.initial.width > 0.0, "pde: gaussian width must be > 0");
}

namespace {

Vector<double> sample_grid(const InitialCondition& ic, int d, Index m) {
  const Index n = checked_pow(m, d);
  Vector<double> u(n);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (Index p = 0; p < n; ++p) {
    Index rest = p;
    for (int mu = d - 1; mu >= 0; --mu) {
      x[static_cast<std::size_t>(mu)] = double(rest % m) / double(m);
      rest /= m;
    }
    u(p) = ic.evaluate(x);
  }
  return u;
}

}  // namespace

Vector<double> sample_initial(const ReactionDiffusionProblem& pde) {
  validate(pde);
  if (pde.initial.kind == InitialCondition::Kind::tabulated)
    return Eigen::Map<const Vector<double>>(pde.initial.values.data(), pde.n());
  return sample_grid(pde.initial, pde.d, pde.m);
}

double u_max(const ReactionDiffusionProblem& pde) {
  return sample_initial(pde).cwiseAbs().maxCoeff();
}

NonlinearOded discretize(const ReactionDiffusionProblem& pde) {
  validate(pde);
  const Index n = pde.n();
  NonlinearOded ode;
  ode.n = n;
  ode.M = pde.M;
  SparseMatrix<double> identity(n, n);
  identity.setIdentity();
  const LaplacianOperatord lap = build_laplacian_dd<double>(pde.k, pde.d, pde.m);
  ode.F1 = pde.D * lap.sparse() + pde.c * identity;
  ode.F1.prune(0.0, 0.0);
  const Index cols = checked_pow(n, pde.M);
  // Column of u_p^M in u^{⊗M}: p(1 + n + ... + n^{M-1}).
  Index stride = 0;
  for (int l = 0; l < pde.M; ++l) stride += checked_pow(n, l);
  std::vector<Eigen::Triplet<double, Index>> trip;
  if (pde.b != 0.0)
    for (Index p = 0; p < n; ++p) trip.emplace_back(p, p * stride, pde.b);
  ode.FM.resize(n, cols);
  ode.FM.setFromTriplets(trip.begin(), trip.end());
  ode.u_in = sample_initial(pde);
  ode.T = pde.T;
  validate(ode);
  return ode;
}

StabilityReport stability_report(const ReactionDiffusionProblem& pde, const NonlinearOded& ode) {
  validate(pde);
  StabilityReport rep;
  rep.u_max = ode.u_in.cwiseAbs().maxCoeff();
  rep.u_norm = ode.u_in.norm();
  const double ab = std::abs(pde.b);
  const double ac = std::abs(pde.c);
  const double upow = std::pow(rep.u_max, double(pde.M - 1));

  const double lhs1 = pde.c != 0.0 ? upow * ab / ac : std::numeric_limits<double>::infinity();
  rep.pde_max_norm = {"pde_max_norm", pde.c < 0.0 && lhs1 < 1.0, lhs1, 1.0, 1.0 - lhs1};

  const double l0 = lambda0(ode.F1);
  rep.R = l0 < 0.0 ? fm_norm(ode.FM) * std::pow(rep.u_norm, double(pde.M - 1)) / std::abs(l0)
                   : std::numeric_limits<double>::infinity();
  rep.ode_r_ratio = {"ode_r_ratio", rep.R < 1.0, rep.R, 1.0, 1.0 - rep.R};

  const double rhs3 = double(pde.M) * ab * upow;
  rep.discretisation = {"discretisation", pde.c < 0.0 && ac > rhs3, ac, rhs3, ac - rhs3};

  rep.gamma = rep.u_norm;
  if (l0 < 0.0) {
    const GammaLimit<double> g = max_stable_gamma(ode);
    rep.gamma_max = g.value;
    rep.gamma_unbounded = g.unbounded;
  } else {
    rep.gamma_max = 0.0;
  }
  const bool ok = l0 < 0.0 && (rep.gamma_unbounded || rep.gamma <= rep.gamma_max);
  rep.rescaling = {"rescaling", ok, rep.gamma, rep.gamma_max, rep.gamma_max - rep.gamma};
  return rep;
}

double estimate_derivative_bound(const ReactionDiffusionProblem& pde) {
  validate(pde);
  const int order = 2 * pde.k + 1;
  Index m = pde.m;
  Vector<double> u;
  if (pde.initial.kind == InitialCondition::Kind::tabulated) {
    u = sample_initial(pde);
  } else {
    m = std::max<Index>(pde.m, 128);
    while (m > pde.m && std::pow(double(m), pde.d) > double(1 << 21)) m /= 2;
    u = sample_grid(pde.initial, pde.d, m);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> mult(static_cast<std::size_t>(m));
  for (Index l = 0; l < m; ++l) {
    const Index wave = l <= m / 2 ? l : l - m;
    std::complex<double> factor = std::pow(std::complex<double>(0.0, 2.0 * std::numbers::pi * double(wave)), order);
    if (m % 2 == 0 && l == m / 2) factor = 0.0;
    mult[static_cast<std::size_t>(l)] = factor;
  }
  const Index n = u.size();
  double total = 0.0;
  std::vector<double> line(static_cast<std::size_t>(m));
  std::vector<std::complex<double>> spec;
  std::vector<double> back;
  for (int mu = 0; mu < pde.d; ++mu) {
    const Index stride = checked_pow(m, pde.d - 1 - mu);
    double sup = 0.0;
    for (Index base = 0; base < n; ++base) {
      if ((base / stride) % m != 0) continue;  // first point of each line along μ
      for (Index i = 0; i < m; ++i) line[static_cast<std::size_t>(i)] = u(base + i * stride);
      fft.fwd(spec, line);
      for (Index l = 0; l < m; ++l) spec[static_cast<std::size_t>(l)] *= mult[static_cast<std::size_t>(l)];
      fft.inv(back, spec);
      for (double v : back) sup = std::max(sup, std::abs(v));
    }
    total += sup;
  }
  return total;
}

namespace {

double kappa(const ReactionDiffusionProblem& pde) {
  const double um = u_max(pde);
  require(pde.c < 0.0, "discretisation bound: c must be < 0");
  const double growth = double(pde.M) * std::abs(pde.b) * std::pow(um, double(pde.M - 1));
  require(std::abs(pde.c) > growth, "discretisation bound: requires |c| > M|b| u_max^(M-1)");
  return pde.c + growth;
}

}  // namespace

double discretisation_error_bound(const ReactionDiffusionProblem& pde, double C, double t) {
  require(C >= 0.0 && std::isfinite(C), "discretisation bound: C must be finite and >= 0");
  require(t >= 0.0, "discretisation bound: t must be >= 0");
  const double kap = kappa(pde);
  const double n = double(pde.n());
  const double spatial = C * std::sqrt(n) * std::pow(std::numbers::e / 2.0, 2.0 * pde.k) *
                         std::pow(n, -double(2 * pde.k - 1) / double(pde.d));
  return spatial * (-std::expm1(kap * t)) / std::abs(kap);
}

GridSizing required_grid_points(const ReactionDiffusionProblem& pde, double C, double eps) {
  require(eps > 0.0, "grid sizing: eps must be > 0");
  require(C > 0.0 && std::isfinite(C), "grid sizing: C must be finite and > 0");
  const double kap = kappa(pde);
  const int k = pde.k;
  const int d = pde.d;
  const double A = C * std::pow(std::numbers::e / 2.0, 2.0 * k) / (std::abs(kap) * eps);
  GridSizing g;
  g.scaling_estimate = std::pow(A, 2.0 * d / (2.0 * (2 * k - 1) + d));
  const double denom = 2.0 * (2 * k - 1) - d;
  double target = g.scaling_estimate;
  if (denom > 0.0) {
    g.sufficient_exists = true;
    g.sufficient = std::max(1.0, std::pow(A, 2.0 * d / denom));
    target = g.sufficient;
  }
  const double m_real = std::ceil(std::pow(target, 1.0 / d) * (1.0 - 1e-14));
  require(m_real < 1e15, "grid sizing: required grid is astronomically large");
  Index m = std::max<Index>(static_cast<Index>(m_real), 2 * k + 1);
  while (std::pow(double(m), d) < target) ++m;
  g.m = m;
  g.points = checked_pow(m, d);
  return g;
}

double matched_error_points(int k, double C_k, double C_1, double n_1) {
  require(k >= 1, "matched points: k must be >= 1");
  require(C_1 > 0.0 && C_k >= 0.0 && n_1 > 0.0, "matched points: positive inputs required");
  return std::pow(C_k * n_1 / C_1, 1.0 / double(2 * k - 1));
}

double lambda_f1(const ReactionDiffusionProblem& pde) {
  const StencilTable table = stencil_coefficients(pde.k);
  return std::abs(pde.c) +
         double(pde.d) * pde.D * double(pde.m) * double(pde.m) * table.lcu_weight().to<double>();
}

}  // namespace carleman
