#include "doctest.h"

#include "carleman/propagator.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace carleman;

namespace {

NonlinearOded scalar_ode(double b, double u0 = 1.0) {
  Matrix<double> F1(1, 1);
  F1 << -1.0;
  Vector<double> u(1);
  u << u0;
  return make_ode<double>(F1, 2, {{0, 0, b}}, u, 1.0);
}

}  // namespace

TEST_CASE("Taylor step") {
  Vector<double> y(2);
  y << 1.0, -2.0;
  auto zero = [](const Vector<double>& x, Vector<double>& out) { out = Vector<double>::Zero(x.size()); };
  CHECK((taylor_step<double>(zero, y, 0.3, 5) - y).norm() == 0.0);

  Vector<double> s(1);
  s << 1.0;
  auto neg = [](const Vector<double>& x, Vector<double>& out) { out = -x; };
  const double r = taylor_step<double>(neg, s, 0.1, 4)(0);
  CHECK(std::abs(r - std::exp(-0.1)) <= std::pow(0.1, 5) / 120.0);
}

TEST_CASE("step planning") {
  PropagationConfig cfg;
  cfg.T = 1.0;
  cfg.dt = 0.003;
  cfg.output_intervals = 100;
  const StepPlan p = plan_steps(cfg, 0.0);
  CHECK(p.steps == 400);
  CHECK(p.dt * double(p.steps) == doctest::Approx(1.0));

  PropagationConfig a;
  a.T = 2.0;
  a.output_intervals = 10;
  CHECK(plan_steps(a, 25.0).steps == 50);
  CHECK(plan_steps(a, 1e12).steps == 1000000);
}

TEST_CASE("linear evolution matches the matrix exponential") {
  Matrix<double> F1(2, 2);
  F1 << -1.0, 0.2, -0.1, -0.5;
  Vector<double> u(2);
  u << 0.7, -0.4;
  const auto ode = make_ode<double>(F1, 2, {}, u, 1.0);
  const CarlemanMatrix<double> A(rescale(ode, 1.0), 3);
  const auto y0 = initial_vector<double>(u, 1.0, 3);
  PropagationConfig cfg;
  cfg.T = 1.0;
  cfg.K = 6;
  cfg.output_intervals = 10;
  const auto prop = evolve(A, y0.data, cfg);
  const Matrix<double> D = A.to_dense();
  const Vector<double> exact = (D * cfg.T).exp() * y0.data;
  const double x = A.spectral_norm_bound() * prop.plan.dt;
  double maxy = 0.0;
  for (double v : prop.norm_history) maxy = std::max(maxy, v);
  const double defect = double(prop.plan.steps) * std::pow(x, cfg.K + 1) / std::tgamma(cfg.K + 2.0) * maxy;
  CHECK((prop.states.back() - exact).norm() <= defect + 1e-14);
  CHECK(prop.times.size() == 11);

  const Vector<double> b1 = prop.states.back().head(2);
  CHECK((b1 - (F1 * cfg.T).exp() * u).norm() < 1e-10);
}

TEST_CASE("norm is non-increasing when the Gershgorin bound is non-positive") {
  const NonlinearOded ode = scalar_ode(0.5);
  const CarlemanMatrix<double> A(rescale(ode, 1.0), 6);
  REQUIRE(A.gershgorin_max_eig_bound() <= 0.0);
  PropagationConfig cfg;
  cfg.T = 1.0;
  cfg.dt = 0.01;
  const auto prop = evolve(A, initial_vector(ode.u_in, 1.0, 6).data, cfg);
  for (std::size_t i = 1; i < prop.norm_history.size(); ++i)
    CHECK(prop.norm_history[i] <= prop.norm_history[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("stability flag and blow-up guard") {
  const NonlinearOded ode = scalar_ode(0.5);
  const CarlemanMatrix<double> A(rescale(ode, 3.0), 6);
  REQUIRE(A.gershgorin_max_eig_bound() > 0.0);
  PropagationConfig cfg;
  cfg.T = 1.0;
  cfg.dt = 0.01;
  const Vector<double> y0 = initial_vector(ode.u_in, 3.0, 6).data;
  CHECK_THROWS_AS(evolve(A, y0, cfg), ValidationError);

  Matrix<double> F1(1, 1);
  F1 << 5.0;
  Vector<double> u(1);
  u << 1.0;
  NonlinearOded grow;
  grow.n = 1;
  grow.M = 2;
  grow.F1 = F1.sparseView();
  grow.FM.resize(1, 1);
  grow.u_in = u;
  grow.T = 10.0;
  const CarlemanMatrix<double> G(rescale(grow, 1.0), 3);
  PropagationConfig gc;
  gc.T = 10.0;
  gc.dt = 0.01;
  gc.strict_stability = false;
  CHECK_THROWS_AS(evolve(G, initial_vector(u, 1.0, 3).data, gc), NumericError);
}

TEST_CASE("block shares and success probability") {
  Vector<double> u(2);
  u << 0.3, 0.4;
  const double gamma = 1.0;
  const int N = 4;
  const auto y = initial_vector<double>(u, gamma, N);
  double total = 0.0;
  for (int j = 1; j <= N; ++j) {
    const auto [blk, share] = extract_block(y.layout, y.data, j);
    CHECK(share >= 0.0);
    total += share;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const double r = u.norm() / gamma;
  const double share1 = extract_block(y.layout, y.data, 1).second;
  CHECK(share1 == doctest::Approx((1 - r * r) / (1 - std::pow(r, 2 * N))));
  CHECK(share1 == doctest::Approx(success_probability(u.norm(), gamma, N)));

  const auto y1 = initial_vector<double>(u, gamma, 1);
  CHECK(extract_block(y1.layout, y1.data, 1).second == 1.0);

  CHECK(success_probability(1.0, 1.0, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(success_probability(0.0, 1.0, 7) == 1.0);
}
