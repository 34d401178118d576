#include <gtest/gtest.h>

#include <chrono>

#include "inflap/solver.hpp"
#include "oracles.hpp"

using namespace inflap;

namespace {

DomainPtr three_nodes() { return build_domain(Box{{0}, {2}}, 1.0); }

ScalarField field3(DomainPtr d, double left, double mid, double right) {
  ScalarField u(d);
  u[0] = left;
  u[1] = mid;
  u[2] = right;
  return u;
}

}  // namespace

TEST(LocalUpdate, HarmonicMidpoint) {
  auto d = three_nodes();
  auto s = build_stencil(d, 1);
  auto u = field3(d, 1.0, 5.0, 4.0);
  EXPECT_NEAR(local_update(1, u, make_rhs("0"), s), 2.5, 1e-14);
}

TEST(LocalUpdate, ConstantRhsFrozenClosedForm) {
  auto d = three_nodes();
  auto s = build_stencil(d, 1);
  auto u = field3(d, 0.0, 1.0, 4.0);
  double c = 0.3;
  // p = (|4-1| + |0-1|)/2 = 2, frozen at the current value
  double want = 2.0 - 1.0 * c / (2 * 4.0);
  EXPECT_NEAR(frozen_update(1, u, c, s), want, 1e-14);
  // p does not depend on t between the neighbours, so the full local root agrees
  EXPECT_NEAR(local_update(1, u, make_rhs("0.3"), s), want, 1e-13);
}

TEST(LocalUpdate, LinearRhsRootAtZero) {
  auto d = three_nodes();
  auto s = build_stencil(d, 1);
  auto u = field3(d, 0.0, 0.7, 0.0);
  EXPECT_NEAR(local_update(1, u, make_rhs("t"), s), 0.0, 1e-12);
}

TEST(LocalUpdate, PicardIsDamped) {
  auto d = three_nodes();
  auto s = build_stencil(d, 1);
  auto u = field3(d, 0.0, 1.0, 4.0);
  auto f = make_rhs("(neg (exp t))");
  double full = local_update(1, u, f, s, {}, Monotone::none, 1.0);
  double half = local_update(1, u, f, s, {}, Monotone::none, 0.5);
  EXPECT_NEAR(half, 0.5 * (1.0 + full), 1e-13);
  // full Picard step solves S p^2 = f(t_old)
  ScalarField v = u;
  v[1] = full;
  EXPECT_NEAR(operator_value(s, v.v.data(), 1, full), -std::exp(1.0), 1e-10);
}

TEST(SolveDirichlet, ConstantData) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.1);
  auto [u, rep] = solve_dirichlet(d, make_rhs("0"), constant_trace(d, 7.0), {});
  EXPECT_EQ(rep.status, Status::converged);
  EXPECT_LE(rep.sweeps, 2);
  for (std::size_t i : d->interior()) EXPECT_NEAR(u[i], 7.0, 1e-12);
}

TEST(SolveDirichlet, OneDimensionalClosedForm) {
  auto d = build_domain(Box{{0}, {1}}, 1.0 / 1000);
  ASSERT_EQ(d->size(), 1001u);
  auto t0 = std::chrono::steady_clock::now();
  auto [u, rep] = solve_dirichlet(d, make_rhs("1"), constant_trace(d, 0.0), {});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(rep.status, Status::converged);
  EXPECT_LE(rep.residual, rep.tol);
  double A = oracle::shoot_cubic_slope_constant();
  EXPECT_NEAR(A, -1.5, 1e-9);
  double err = 0;
  for (std::size_t i = 0; i < d->size(); ++i) err = std::max(err, std::fabs(u[i] - oracle::cubic_slope_solution(d->point(i)[0], A)));
  EXPECT_LE(err, 1e-2);
  EXPECT_LT(secs, 30.0);
}

TEST(SolveDirichlet, SmallCubicCoefficientGivesZero) {
  double R = 0.9;
  auto d = build_domain(Ball{{0, 0}, R}, 0.05);
  auto f = make_rhs("(neg (mul (coef a) (pow t 3)))");
  set_coef(f, "a", "(add 0.6 (mul 0.4 x0))");
  ASSERT_LT(sigma_cubed * 1.0 * std::pow(R, 4), 1.0);
  auto [u, rep] = solve_dirichlet(d, f, constant_trace(d, 0.0), {});
  EXPECT_EQ(rep.status, Status::converged);
  for (std::size_t i : d->interior()) EXPECT_NEAR(u[i], 0.0, rep.tol);
}

TEST(SolveDirichlet, RejectsBadOptions) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.25);
  SolveOptions o;
  o.max_sweeps = 0;
  EXPECT_THROW(solve_dirichlet(d, make_rhs("0"), constant_trace(d, 0.0), o), Error);
  o.max_sweeps = 10;
  o.tol = 0.0;
  EXPECT_THROW(solve_dirichlet(d, make_rhs("0"), constant_trace(d, 0.0), o), Error);
}

TEST(SolveDirichlet, RedBlackAgreesWithLexicographic) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.125);
  auto b = make_trace(d, [](const Point& x) { return x[0] * x[1] + x[0]; });
  SolveOptions o;
  auto [u, r1] = solve_dirichlet(d, make_rhs("(add 1 t)"), b, o);
  o.order = SweepOrder::red_black;
  auto [v, r2] = solve_dirichlet(d, make_rhs("(add 1 t)"), b, o);
  ASSERT_EQ(r1.status, Status::converged);
  ASSERT_EQ(r2.status, Status::converged);
  for (std::size_t i : d->interior()) EXPECT_NEAR(u[i], v[i], 1e-6);
}

TEST(SolveDirichlet, GaussSeidelOnlyStillConverges) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.25);
  SolveOptions o;
  o.newton = false;
  auto [u, rep] = solve_dirichlet(d, make_rhs("1"), constant_trace(d, 0.0), o);
  EXPECT_EQ(rep.status, Status::converged);
  EXPECT_EQ(rep.newton_steps, 0);
}

TEST(Perron, FixedPointIsReturnedUnchanged) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.125);
  auto b = constant_trace(d, 0.0);
  auto f = make_rhs("(add 1 t)");
  auto [u, r0] = solve_dirichlet(d, f, b, {});
  ASSERT_EQ(r0.status, Status::converged);
  SolveOptions o;
  o.tol = 10 * r0.tol;
  auto [v, rep] = perron_solve(d, f, b, u, u, o);
  EXPECT_EQ(rep.status, Status::converged);
  EXPECT_LE(rep.sweeps, 1);
  for (std::size_t i = 0; i < d->size(); ++i) EXPECT_EQ(u[i], v[i]);
}

TEST(Perron, OrderingViolationIsError) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.25);
  auto b = constant_trace(d, 0.0);
  try {
    perron_solve(d, make_rhs("0"), b, ScalarField(d, 1.0), ScalarField(d, 0.0), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "ordering");
  }
  // boundary data above super
  EXPECT_THROW(perron_solve(d, make_rhs("0"), constant_trace(d, 2.0), ScalarField(d, -1.0), ScalarField(d, 1.0), {}),
               Error);
}

TEST(Perron, ExponentialSmallBallBetweenCones) {
  auto d = build_domain(Ball{{0, 0}, 0.5}, 1.0 / 32);
  auto b = constant_trace(d, 0.0);
  auto f = make_rhs("(neg (exp t))");
  auto cones = oracle::exp_cones(d);
  std::size_t sweeps = 0;
  bool sandwich = true, monotone = true;
  ScalarField prev = cones.sub;
  for (std::size_t i : d->boundary()) prev[i] = 0;
  SolveOptions o;
  o.on_sweep = [&](const ScalarField& u) {
    ++sweeps;
    for (std::size_t i = 0; i < d->size(); ++i) {
      if (d->tag(i) == Tag::exterior) continue;
      if (u[i] < cones.sub[i] || u[i] > cones.super[i]) sandwich = false;
      if (u[i] < prev[i]) monotone = false;
    }
    prev = u;
  };
  auto [u, rep] = perron_solve(d, f, b, cones.sub, cones.super, o);
  EXPECT_EQ(rep.status, Status::converged);
  EXPECT_LE(rep.residual, rep.tol);
  EXPECT_TRUE(rep.monotone);
  EXPECT_TRUE(monotone);
  EXPECT_TRUE(sandwich);
  EXPECT_EQ(static_cast<int>(sweeps), rep.sweeps);
  // l - delta <= u <= L + delta with l = L = 0, delta = 3
  for (std::size_t i : d->interior()) {
    EXPECT_GE(u[i], -3.0);
    EXPECT_LE(u[i], 3.0);
    EXPECT_GE(u[i], 0.0);
  }
}

TEST(Perron, HarmonicBetweenConesMatchesDirichletSolve) {
  auto d = build_domain(Box{{0, 0}, {1, 1}}, 1.0 / 16);
  auto b = make_trace(d, [](const Point& x) { return 2 * x[0] - x[1]; });
  Point z{0.5, 0.5};
  auto sub = sample(d, [&](const Point& x) { return -3 + sigma * std::pow(distance(x.data(), z.data(), 2), 4.0 / 3.0); });
  auto super = sample(d, [&](const Point& x) { return 3 - sigma * std::pow(distance(x.data(), z.data(), 2), 4.0 / 3.0); });
  auto [u, rep] = perron_solve(d, make_rhs("0"), b, sub, super, {});
  EXPECT_EQ(rep.status, Status::converged);
  auto [v, r2] = solve_dirichlet(d, make_rhs("0"), b, {});
  ASSERT_EQ(r2.status, Status::converged);
  // linear data is its own discrete extension
  for (std::size_t i : d->interior()) {
    auto x = d->point(i);
    EXPECT_NEAR(u[i], 2 * x[0] - x[1], 1e-6);
    EXPECT_NEAR(u[i], v[i], 1e-6);
  }
}

TEST(Probe, ExponentialLargeBallDiverges) {
  auto d = build_domain(Ball{{0, 0}, 3.0}, 3.0 / 16);
  ASSERT_GT(d->radii().in_radius, std::pow(3 / sigma, 0.75));
  SolveOptions o;
  o.alarm_bound = 50;
  auto rep = probe_nonexistence(d, make_rhs("(neg (exp t))"), constant_trace(d, 0.0), o);
  EXPECT_EQ(rep.status, Status::diverged_past_alarm);
  EXPECT_LE(rep.sweeps, 100000);
}

TEST(Probe, ExponentialSmallBallConverges) {
  auto d = build_domain(Ball{{0, 0}, 0.5}, 1.0 / 32);
  SolveOptions o;
  o.alarm_bound = 50;
  auto rep = probe_nonexistence(d, make_rhs("(neg (exp t))"), constant_trace(d, 0.0), o);
  EXPECT_EQ(rep.status, Status::converged);
}

TEST(Probe, HarmonicAlwaysConverges) {
  auto d = build_domain(Box{{0, 0}, {2, 1}}, 0.125);
  SolveOptions o;
  o.alarm_bound = 10;
  auto b = make_trace(d, [](const Point& x) { return std::sin(3 * x[0]); });
  EXPECT_EQ(probe_nonexistence(d, make_rhs("0"), b, o).status, Status::converged);
}

TEST(Probe, NeedsAlarm) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.25);
  EXPECT_THROW(probe_nonexistence(d, make_rhs("0"), constant_trace(d, 0.0), {}), Error);
}

TEST(Properties, DiscreteComparisonForOrderedRhs) {
  // f1 = 1 > f2 = 0 with equal data: u - v peaks on the boundary up to c tol / eps, c = 1
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.1);
  auto b = make_trace(d, [](const Point& x) { return x[0] + 0.5 * x[1] * x[1]; });
  auto [u, ru] = solve_dirichlet(d, make_rhs("1"), b, {});
  auto [v, rv] = solve_dirichlet(d, make_rhs("0"), b, {});
  ASSERT_EQ(ru.status, Status::converged);
  ASSERT_EQ(rv.status, Status::converged);
  double eps = 1.0, c = 1.0;
  double in_max = -inf, bd_max = -inf;
  for (std::size_t i : d->interior()) in_max = std::max(in_max, u[i] - v[i]);
  for (std::size_t i : d->boundary()) bd_max = std::max(bd_max, u[i] - v[i]);
  EXPECT_LE(in_max, bd_max + c * std::max(ru.tol, rv.tol) / eps);
}

TEST(Properties, DegreeThreeScaling) {
  auto d = build_domain(Ball{{0, 0}, 1.0}, 0.1);
  double c = 2.0;
  auto b = make_trace(d, [](const Point& x) { return 0.3 * x[0]; });
  auto bc = make_trace(d, [&](const Point& x) { return c * 0.3 * x[0]; });
  // f(t) = 1 + t/2 and c^3 f(t/c) = 8 + 2t
  auto [u, r1] = solve_dirichlet(d, make_rhs("(add 1 (mul 0.5 t))"), b, {});
  auto [w, r2] = solve_dirichlet(d, make_rhs("(add 8 (mul 2 t))"), bc, {});
  ASSERT_EQ(r1.status, Status::converged);
  ASSERT_EQ(r2.status, Status::converged);
  for (std::size_t i : d->interior()) EXPECT_NEAR(w[i], c * u[i], 1e-6);
}
