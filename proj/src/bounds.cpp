#include "carleman/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace carleman {

namespace {

void check_fjk_args(int j, int k, int M, double tau) {
  require(j >= 1, "f: j must be >= 1");
  require(k >= 1, "f: k must be >= 1");
  require(M >= 2, "f: M must be >= 2");
  require(tau >= 0.0 && std::isfinite(tau), "f: tau must be finite and >= 0");
}

// Neumaier summation after sorting by magnitude.
long double compensated_sum(std::vector<long double> terms) {
  std::sort(terms.begin(), terms.end(),
            [](long double a, long double b) { return std::fabs(a) < std::fabs(b); });
  long double sum = 0.0L;
  long double comp = 0.0L;
  for (long double x : terms) {
    const long double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

// Lobatto-Chebyshev nodes on [-1, 1] and the cumulative integration matrix
// Q(i, j) = ∫_{-1}^{x_i} ℓ_j(s) ds of the Lagrange basis.
struct PanelRule {
  static constexpr int kNodes = 16;
  std::vector<double> x;
  Matrix<double> Q;

  PanelRule() {
    const int p = kNodes;
    x.resize(p);
    for (int i = 0; i < p; ++i) x[i] = -std::cos(std::numbers::pi * i / (p - 1));
    std::vector<double> bw(p);  // barycentric weights
    for (int j = 0; j < p; ++j) {
      double w = 1.0;
      for (int m = 0; m < p; ++m)
        if (m != j) w /= (x[j] - x[m]);
      bw[j] = w;
    }
    // Gauss-Legendre with p points integrates the degree p-1 basis exactly.
    std::vector<double> gx(p), gw(p);
    for (int i = 0; i < p; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (p + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int l = 1; l <= p; ++l) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * l - 1.0) * z * p1 - (l - 1.0) * p2) / l;
        }
        const double dp = p * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) {
          gw[i] = 2.0 / ((1.0 - z * z) * dp * dp);
          break;
        }
        gw[i] = 2.0 / ((1.0 - z * z) * dp * dp);
      }
      gx[i] = z;
    }
    auto lagrange = [&](int j, double s) {
      double v = 1.0;
      for (int m = 0; m < p; ++m)
        if (m != j) v *= (s - x[m]);
      return v * bw[j];
    };
    Q.setZero(p, p);
    for (int i = 1; i < p; ++i) {
      const double half = (x[i] + 1.0) / 2.0;
      for (int q = 0; q < p; ++q) {
        const double s = -1.0 + half * (gx[q] + 1.0);
        for (int j = 0; j < p; ++j) Q(i, j) += half * gw[q] * lagrange(j, s);
      }
    }
  }
};

const PanelRule& panel_rule() {
  static const PanelRule rule;
  return rule;
}

// Evaluates the nested recurrence on `panels` equal panels of [0, tau].
double chain_value(const std::vector<double>& rates, double tau, int panels) {
  const PanelRule& rule = panel_rule();
  const int p = PanelRule::kNodes;
  const double h = tau / panels;
  std::vector<double> g(static_cast<std::size_t>(panels) * p);
  auto node = [&](int panel, int i) { return panel * h + 0.5 * h * (rule.x[i] + 1.0); };
  const double base_rate = rates.back();
  for (int pn = 0; pn < panels; ++pn)
    for (int i = 0; i < p; ++i) g[pn * p + i] = -std::expm1(-base_rate * node(pn, i));

  std::vector<double> w(p);
  for (int level = static_cast<int>(rates.size()) - 2; level >= 0; --level) {
    const double r = rates[static_cast<std::size_t>(level)];
    double fa = 0.0;
    for (int pn = 0; pn < panels; ++pn) {
      const double a = pn * h;
      for (int i = 0; i < p; ++i) w[i] = std::exp(r * (node(pn, i) - a)) * g[pn * p + i];
      for (int i = 0; i < p; ++i) {
        double integral = 0.0;
        for (int j = 0; j < p; ++j) integral += rule.Q(i, j) * w[j];
        integral *= 0.5 * h;
        g[pn * p + i] = std::exp(-r * (node(pn, i) - a)) * (fa + r * integral);
      }
      fa = g[pn * p + p - 1];
    }
  }
  return g.back();
}

}  // namespace

double f_closed(int j, int k, int M, double tau) {
  check_fjk_args(j, k, M, tau);
  if (tau == 0.0) return 0.0;
  if (k == 1) return -std::expm1(-double(j) * tau);
  const long double step = M - 1;
  const long double a = static_cast<long double>(j) / step;
  const long double log_prefactor =
      std::log(step) + std::lgamma(static_cast<long double>(k) + a) - std::lgamma((long double)k) -
      std::lgamma(a);
  std::vector<long double> terms;
  terms.reserve(static_cast<std::size_t>(k));
  long double magnitude = 0.0L;
  for (int l = 0; l < k; ++l) {
    const long double rate = step * l + j;
    const long double log_binom = std::lgamma((long double)k) - std::lgamma((long double)l + 1) -
                                  std::lgamma((long double)(k - l));
    const long double v =
        std::exp(log_prefactor + log_binom - rate * static_cast<long double>(tau)) / rate;
    const long double term = (l % 2 == 0) ? v : -v;
    magnitude += std::fabs(term);
    terms.push_back(term);
  }
  const long double raw = 1.0L - compensated_sum(std::move(terms));
  const double value = static_cast<double>(raw);
  if (!std::isfinite(value) || value < -1e-8 || value > 1.0 + 1e-8)
    throw NumericError("f_closed: raw value " + std::to_string(value) +
                       " outside [0, 1] verification band");
  // Round-off in the alternating sum scales with its largest terms.
  if (static_cast<double>(magnitude) * 1e-17 > 1e-10)
    throw NumericError("f_closed: alternating sum too ill-conditioned");
  return std::clamp(value, 0.0, 1.0);
}

double f_quadrature(int j, int k, int M, double tau, double tol) {
  check_fjk_args(j, k, M, tau);
  require(k <= 20, "f_quadrature: k must be <= 20");
  require(tol > 0.0, "f_quadrature: tol must be > 0");
  if (tau == 0.0) return 0.0;
  if (k == 1) return -std::expm1(-double(j) * tau);
  std::vector<double> rates(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) rates[static_cast<std::size_t>(l)] = double(j + l * (M - 1));
  int panels = std::max(2, static_cast<int>(std::ceil(rates.back() * tau)));
  double prev = chain_value(rates, tau, panels);
  while (panels < (1 << 16)) {
    panels *= 2;
    const double cur = chain_value(rates, tau, panels);
    if (std::abs(cur - prev) <= 0.1 * tol) return std::clamp(cur, 0.0, 1.0);
    prev = cur;
  }
  throw NumericError("f_quadrature: panel refinement did not converge");
}

double f_value(int j, int k, int M, double tau) {
  try {
    return f_closed(j, k, M, tau);
  } catch (const NumericError&) {
    return f_quadrature(j, k, M, tau);
  }
}

int omega_k(int N, int j, int M) {
  require(M >= 2, "omega_k: M must be >= 2");
  require(j >= 1 && j <= N, "omega_k: level j must lie in [1, N]");
  const int step = M - 1;
  const int k = (N - j + 1 + step - 1) / step;
  if (!(N - k * step + 1 <= j && j <= N - (k - 1) * step))
    throw NumericError("omega_k: level " + std::to_string(j) + " not in the computed index set");
  return k;
}

double OdeSummary::r_ratio() const {
  require(lambda0 < 0.0, "not dissipative: lambda0 >= 0");
  return fm_norm * std::pow(u_norm, double(M - 1)) / std::abs(lambda0);
}

OdeSummary summarize(const NonlinearOded& ode) {
  validate(ode);
  return OdeSummary{ode.M, lambda0(ode.F1), fm_norm(ode.FM), ode.u_in.norm()};
}

double global_error_bound(const OdeSummary& s, double gamma, int N, double t,
                          bool allow_gamma_override) {
  require(s.lambda0 < 0.0, "global bound: not dissipative (lambda0 >= 0)");
  require(std::abs(s.lambda0) > std::pow(s.u_norm, double(s.M - 1)) * s.fm_norm,
          "global bound: requires |lambda0| > ||u_in||^(M-1) ||FM||");
  require(gamma > 0.0, "global bound: gamma must be > 0");
  require(allow_gamma_override || std::abs(gamma - s.u_norm) <= 1e-12 * std::max(1.0, s.u_norm),
          "global bound: gamma must equal ||u_in|| unless overridden");
  require(N >= 1, "global bound: N must be >= 1");
  require(t >= 0.0, "global bound: t must be >= 0");
  const double mu = s.lambda0 + std::pow(gamma, double(s.M - 1)) * s.fm_norm;
  require(mu < 0.0, "global bound: exponent lambda0 + gamma^(M-1)||FM|| must be negative");
  return double(s.M - 1) * s.fm_norm * std::pow(s.u_norm, double(s.M - 1)) *
         (-std::expm1(double(N) * mu * t)) / std::abs(mu);
}

double component_error_bound(const OdeSummary& s, double gamma, int N, int j, double t) {
  require(gamma > 0.0, "component bound: gamma must be > 0");
  require(t >= 0.0, "component bound: t must be >= 0");
  const double R = s.r_ratio();
  require(R < 1.0, "component bound: R = " + std::to_string(R) + " must be < 1");
  const int k = omega_k(N, j, s.M);
  return std::pow(s.u_norm / gamma, double(j)) * std::pow(R, double(k)) *
         f_value(j, k, s.M, std::abs(s.lambda0) * t);
}

OrderSelection required_carleman_order(double R, int M, double eps, std::optional<double> lambda0,
                                       std::optional<double> T) {
  require(R > 0.0 && R < 1.0, "required order: R = " + std::to_string(R) +
                                  " must be in (0, 1) (not dissipative enough)");
  require(eps > 0.0 && eps < 1.0, "required order: eps must be in (0, 1)");
  require(M >= 2, "required order: M must be >= 2");
  const double ratio = std::log(1.0 / eps) / std::log(1.0 / R);
  const int levels = std::max(1, static_cast<int>(std::ceil(ratio - 1e-12)));
  OrderSelection sel;
  sel.closed_form = std::max((M - 1) * levels - (M - 2), M + 1);
  sel.refined = sel.closed_form;
  if (lambda0 && T) {
    require(*lambda0 < 0.0, "required order: lambda0 must be < 0");
    const double tau = std::abs(*lambda0) * *T;
    for (int N = M + 1; N <= sel.closed_form; ++N) {
      const int k = (N + M - 2) / (M - 1);
      const double b = std::pow(R, double(k)) * f_value(1, k, M, tau);
      sel.trace.emplace_back(N, b);
      if (b <= eps) {
        sel.refined = N;
        break;
      }
    }
  }
  return sel;
}

MaxNormBound maxnorm_error_bound(const MaxNormInputs& in, int N, int j, double t, double G) {
  require(in.c < 0.0, "max-norm bound: c must be < 0");
  require(G >= 1.0, "max-norm bound: G must be >= 1");
  require(t >= 0.0, "max-norm bound: t must be >= 0");
  require(in.d >= 1, "max-norm bound: d must be >= 1");
  MaxNormBound out;
  out.k = omega_k(N, j, in.M);
  out.bracket = in.fm_inf_norm / std::abs(in.c) * std::pow(in.u_max, double(in.M - 1)) *
                std::pow(G, double(in.d * in.M));
  if (out.bracket >= 1.0) {
    out.converges = false;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::pow(G, double(in.d * j)) * std::pow(out.bracket, double(out.k)) *
              f_value(j, out.k, in.M, std::abs(in.c) * t);
  return out;
}

BoundReport make_bound_report(const NonlinearOded& ode, double gamma, int N,
                              const std::vector<double>& times, std::optional<double> eps) {
  require(gamma > 0.0, "bound report: gamma must be > 0");
  require(N >= 1, "bound report: N must be >= 1");
  const OdeSummary s = summarize(ode);
  BoundReport rep;
  rep.R = s.r_ratio();
  rep.lambda0 = s.lambda0;
  rep.gamma = gamma;
  rep.N = N;
  rep.M = s.M;
  const GammaLimit<double> gmax = max_stable_gamma(ode);
  rep.gamma_max = gmax.value;
  rep.gamma_unbounded = gmax.unbounded;
  rep.r_below_one = rep.R < 1.0;
  rep.gamma_stable = gmax.unbounded || gamma <= gmax.value * (1.0 + 1e-12);
  if (!rep.r_below_one) return rep;
  for (double t : times) {
    for (int j = 1; j <= N; ++j) {
      const int k = omega_k(N, j, s.M);
      const double f = f_value(j, k, s.M, std::abs(s.lambda0) * t);
      rep.rows.push_back({t, j, k, f, component_error_bound(s, gamma, N, j, t)});
    }
    if (std::abs(gamma - s.u_norm) <= 1e-12 * std::max(1.0, s.u_norm))
      rep.global_bound.push_back(global_error_bound(s, gamma, N, t));
  }
  if (eps && rep.R > 0.0) rep.order = required_carleman_order(rep.R, s.M, *eps, s.lambda0, ode.T);
  return rep;
}

}  // namespace carleman
