#include "doctest.h"

#include "carleman/pde.hpp"
#include "carleman/stencil.hpp"

#include <cmath>

using namespace carleman;

namespace {

ReactionDiffusionProblem demo(Index m = 32, int k = 2) {
  ReactionDiffusionProblem p;
  p.D = 0.2;
  p.c = -2.0;
  p.b = 0.5;
  p.M = 2;
  p.d = 1;
  p.m = m;
  p.k = k;
  p.T = 1.0;
  p.initial.kind = InitialCondition::Kind::cosine;
  p.initial.amplitude = 0.4;
  return p;
}

}  // namespace

TEST_CASE("discretised operator structure") {
  const ReactionDiffusionProblem p = demo(16, 2);
  const NonlinearOded ode = discretize(p);
  const Matrix<double> F1 = Matrix<double>(ode.F1);
  CHECK((F1 - F1.transpose()).norm() < 1e-12);
  CHECK(lambda0(ode.F1) == doctest::Approx(p.c).epsilon(1e-10));
  CHECK(ode.FM.nonZeros() == ode.n);
  CHECK(fm_norm(ode.FM) == doctest::Approx(std::abs(p.b)));
  const Vector<double> u = sample_initial(p);
  const Vector<double> nl = apply_nonlinearity(ode.FM, 2, u);
  CHECK((nl - p.b * u.cwiseProduct(u)).norm() < 1e-14);
}

TEST_CASE("one-sparse positions for n=2") {
  ReactionDiffusionProblem p = demo(4, 1);
  p.m = 2;
  p.k = 1;
  CHECK_THROWS_AS(discretize(p), ValidationError);
  p.m = 3;
  const NonlinearOded ode = discretize(p);
  CHECK(ode.FM.coeff(0, 0) == p.b);
  CHECK(ode.FM.coeff(1, 4) == p.b);
  CHECK(ode.FM.coeff(2, 8) == p.b);
}

TEST_CASE("multi-dimensional sampling is row-major") {
  ReactionDiffusionProblem p = demo(4, 1);
  p.d = 2;
  p.initial.kind = InitialCondition::Kind::tabulated;
  p.initial.values.resize(16);
  for (int i = 0; i < 16; ++i) p.initial.values[static_cast<std::size_t>(i)] = i;
  const Vector<double> u = sample_initial(p);
  CHECK(u(5) == 5.0);
  p.initial.kind = InitialCondition::Kind::cosine;
  const Vector<double> c = sample_initial(p);
  CHECK(c(0) == doctest::Approx(0.8));
  CHECK(c(1) == doctest::Approx(0.4));
  CHECK(c(4 * 2) == doctest::Approx(0.4 * (1 - 1)));
}

TEST_CASE("stability verdicts") {
  ReactionDiffusionProblem p = demo();
  const StabilityReport rep = stability_report(p, discretize(p));
  CHECK(rep.all_passed());

  ReactionDiffusionProblem lin = demo();
  lin.b = 0.0;
  CHECK(stability_report(lin, discretize(lin)).all_passed());

  ReactionDiffusionProblem s = demo();
  s.initial.amplitude = 0.8;
  const StabilityReport scaled = stability_report(s, discretize(s));
  CHECK(scaled.pde_max_norm.lhs == doctest::Approx(2.0 * rep.pde_max_norm.lhs));

  ReactionDiffusionProblem gap = demo(64, 1);
  gap.c = -1.0;
  gap.initial.kind = InitialCondition::Kind::constant;
  gap.initial.amplitude = 1.0;
  const StabilityReport g = stability_report(gap, discretize(gap));
  CHECK(g.pde_max_norm.passed);
  CHECK_FALSE(g.ode_r_ratio.passed);
}

TEST_CASE("discretisation error bound") {
  const ReactionDiffusionProblem p = demo(32, 1);
  CHECK(discretisation_error_bound(p, 1.0, 0.0) == 0.0);
  ReactionDiffusionProblem lin = p;
  lin.b = 0.0;
  const double n = 32.0;
  const double limit = std::sqrt(n) * std::pow(std::exp(1.0) / 2, 2) / n / 2.0;
  CHECK(discretisation_error_bound(lin, 1.0, 60.0) == doctest::Approx(limit));
  ReactionDiffusionProblem twice = p;
  twice.m = 64;
  const double ratio = discretisation_error_bound(p, 1.0, 1.0) / discretisation_error_bound(twice, 1.0, 1.0);
  CHECK(ratio == doctest::Approx(std::pow(2.0, 0.5)));
}

TEST_CASE("grid sizing") {
  ReactionDiffusionProblem p = demo(32, 2);
  const GridSizing g2 = required_grid_points(p, 1.0, 1e-3);
  REQUIRE(g2.sufficient_exists);
  ReactionDiffusionProblem at = p;
  at.m = g2.m;
  for (double t : {0.1, 1.0, 10.0, 100.0}) CHECK(discretisation_error_bound(at, 1.0, t) <= 1e-3);
  p.k = 3;
  const GridSizing g3 = required_grid_points(p, 1.0, 1e-3);
  CHECK(g3.m <= g2.m);
  CHECK(matched_error_points(2, 8.0, 1.0, 64.0) == doctest::Approx(std::cbrt(512.0)));
}

TEST_CASE("derivative estimate of a single cosine mode") {
  ReactionDiffusionProblem p = demo(32, 1);
  const double C = estimate_derivative_bound(p);
  CHECK(C == doctest::Approx(0.4 * std::pow(2 * M_PI, 3)).epsilon(1e-8));
}

TEST_CASE("lambda values from the stencil") {
  ReactionDiffusionProblem p = demo(4, 1);
  p.D = 1.0;
  CHECK(lambda_f1(p) == doctest::Approx(50.0));
  CHECK(lambda_fm(p) == doctest::Approx(0.5));
  CHECK(u_max(demo()) == doctest::Approx(0.8));
}

TEST_CASE("invalid problems") {
  ReactionDiffusionProblem p = demo();
  p.M = 1;
  CHECK_THROWS_AS(validate(p), ValidationError);
  p = demo();
  p.D = -1.0;
  CHECK_THROWS_AS(validate(p), ValidationError);
  CHECK_THROWS_AS(parse_profile("square"), ValidationError);
  CHECK(parse_profile("gaussian") == InitialCondition::Kind::gaussian);
}
