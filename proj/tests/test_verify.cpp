#include <gtest/gtest.h>

#include <random>

#include "inflap/verify.hpp"

using namespace inflap;

namespace {

DomainPtr unit_ball(double h = 1.0 / 16) { return build_domain(Ball{{0, 0}, 1.0}, h); }

ScalarField solve(DomainPtr d, const std::string& f, const BoundaryTrace& b, double* tol = nullptr) {
  auto [u, rep] = solve_dirichlet(d, make_rhs(f), b, {});
  EXPECT_EQ(rep.status, Status::converged) << f;
  if (tol) *tol = rep.tol;
  return u;
}

void expect_consistent(const CheckResult& r) {
  if (r.status == "undetermined") {
    EXPECT_FALSE(r.passed);
    return;
  }
  EXPECT_EQ(r.passed, r.margin >= -r.tol) << r.name;
  EXPECT_EQ(r.status, r.passed ? "pass" : "fail") << r.name;
}

std::size_t centre(const GridDomain& d) {
  std::size_t best = d.interior().front();
  double bd = inf;
  for (std::size_t i : d.interior()) {
    Point x = d.point(i);
    double r = std::hypot(x[0], x[1]);
    if (r < bd) bd = r, best = i;
  }
  return best;
}

}  // namespace

TEST(CheckResidual, SolutionPassesBothSides) {
  auto d = unit_ball(0.125);
  double tol;
  auto u = solve(d, "1", constant_trace(d, 0.0), &tol);
  auto s = build_stencil(d, 2);
  for (Side side : {Side::sub, Side::super, Side::both}) {
    auto r = check_residual(u, make_rhs("1"), s, side, tol);
    EXPECT_TRUE(r.passed);
    expect_consistent(r);
  }
  // the f = 1 solution is a strict supersolution of f = 2 and fails as a subsolution
  EXPECT_TRUE(check_residual(u, make_rhs("2"), s, Side::super, tol).passed);
  EXPECT_FALSE(check_residual(u, make_rhs("2"), s, Side::sub, tol).passed);
}

TEST(CheckComparison, EqualFieldsHaveZeroMargin) {
  auto d = unit_ball(0.125);
  auto u = sample(d, [](const Point& x) { return x[0] * x[1]; });
  auto r = check_comparison(u, u, CompareMode::signed_rhs, 0, Sign::nonneg);
  EXPECT_EQ(r.margin, 0.0);
  EXPECT_TRUE(r.passed);
}

TEST(CheckComparison, ConeCorrectionKeepsBoundaryDominant) {
  auto d = unit_ball();
  auto b = make_trace(d, [](const Point& x) { return x[0] + 0.5 * x[1]; });
  auto u = solve(d, "0", b);
  auto cone = cone_field(d, 1.0, Point{0, 0}, 1.0, Orientation::super);
  ScalarField v = u;
  for (std::size_t i = 0; i < d->size(); ++i) v[i] += cone[i];
  auto r = check_comparison(u, v, CompareMode::signed_rhs, 0, Sign::nonneg);
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.margin, 0.1);
  expect_consistent(r);
}

TEST(CheckComparison, StrictlyOrderedConstants) {
  auto d = unit_ball(0.125);
  auto b = make_trace(d, [](const Point& x) { return x[1]; });
  double tol;
  auto u = solve(d, "1", b, &tol);
  auto v = solve(d, "0", b);
  ASSERT_TRUE(strictly_ordered(make_rhs("1"), make_rhs("0"), *d));
  auto r = check_comparison(u, v, CompareMode::strict_ordered_rhs, 10 * tol + d->spacing());
  EXPECT_TRUE(r.passed) << r.margin;
  expect_consistent(r);
}

TEST(CheckComparison, RandomOrderedPairs) {
  auto d = unit_ball(0.125);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-2, 2);
  auto b = make_trace(d, [](const Point& x) { return x[0] * x[0] - x[1]; });
  for (int k = 0; k < 5; ++k) {
    double c1 = U(rng), c2 = U(rng);
    if (c1 == c2) continue;
    if (c1 < c2) std::swap(c1, c2);
    double tol;
    auto u = solve(d, fmt12(c1), b, &tol);
    auto v = solve(d, fmt12(c2), b);
    auto r = check_comparison(u, v, CompareMode::strict_ordered_rhs, 10 * tol + d->spacing());
    EXPECT_TRUE(r.passed) << c1 << " " << c2 << " margin " << r.margin;
  }
}

TEST(CheckComparison, RefusesMixedSign) {
  auto d = unit_ball(0.25);
  ScalarField u(d, 0.0);
  auto r = check_comparison(u, u, CompareMode::signed_rhs, 0, Sign::mixed);
  EXPECT_EQ(r.status, "undetermined");
  EXPECT_FALSE(r.passed);
}

TEST(CheckComparison, DomainMismatch) {
  ScalarField u(unit_ball(0.25)), v(unit_ball(0.125));
  EXPECT_THROW(check_comparison(u, v, CompareMode::strict_ordered_rhs, 0), Error);
}

TEST(ZeroLevels, Examples) {
  auto z = zero_levels([](double t) { return t; });
  EXPECT_EQ(z.lower, 0.0);
  EXPECT_EQ(z.upper, 0.0);
  z = zero_levels([](double) { return 0.0; });
  EXPECT_EQ(z.lower, -inf);
  EXPECT_EQ(z.upper, inf);
  z = zero_levels([](double t) { return 1 + std::exp(t); });
  EXPECT_EQ(z.lower, inf);
  EXPECT_EQ(z.upper, -inf);
  z = zero_levels([](double t) { return std::max(t - 1, 0.0) + std::min(t + 2, 0.0); });
  EXPECT_NEAR(z.lower, -2.0, 1e-12);
  EXPECT_NEAR(z.upper, 1.0, 1e-12);
  z = zero_levels([](double t) { return std::max(t - 0.3, 0.0); });
  EXPECT_EQ(z.lower, -inf);
  EXPECT_NEAR(z.upper, 0.3, 1e-12);
  z = zero_levels([](double t) { return std::pow(t - 0.25, 3); });
  EXPECT_NEAR(z.lower, 0.25, 1e-12);
  EXPECT_EQ(z.lower, z.upper);
}

TEST(CheckMonotoneComparison, HarmonicReducesToOrderedData) {
  auto d = unit_ball(0.125);
  auto u = solve(d, "0", make_trace(d, [](const Point& x) { return x[0]; }));
  auto v = solve(d, "0", make_trace(d, [](const Point& x) { return x[0] + 0.2 + 0.1 * x[1] * x[1]; }));
  auto r = check_monotone_comparison(u, v, make_rhs("0"), 1e-8);
  EXPECT_TRUE(r.passed) << r.notes;
  expect_consistent(r);
}

TEST(CheckMonotoneComparison, LinearRhsUsesZeroLevel) {
  auto d = unit_ball(0.125);
  double tol;
  auto u = solve(d, "t", make_trace(d, [](const Point& x) { return x[0] - 1; }), &tol);
  auto v = solve(d, "t", make_trace(d, [](const Point& x) { return x[0] + 0.5; }));
  auto r = check_monotone_comparison(u, v, make_rhs("t"), 10 * tol);
  EXPECT_EQ(r.notes, "u <= v on bdry, u <= lower zero level");
  EXPECT_TRUE(r.passed) << r.margin;
  expect_consistent(r);
}

TEST(CheckMonotoneComparison, NoHypothesisIsUndetermined) {
  auto d = unit_ball(0.125);
  auto u = solve(d, "t", make_trace(d, [](const Point& x) { return x[0]; }));
  auto v = solve(d, "t", make_trace(d, [](const Point& x) { return x[0] + 0.1; }));
  auto r = check_monotone_comparison(u, v, make_rhs("t"), 1e-8);
  EXPECT_EQ(r.status, "undetermined");
}

TEST(CheckMonotoneComparison, RejectsUnsuitableRhs) {
  auto d = unit_ball(0.25);
  ScalarField u(d, 0.0);
  EXPECT_THROW(check_monotone_comparison(u, u, make_rhs("(mul x0 t)"), 0), Error);
  EXPECT_THROW(check_monotone_comparison(u, u, make_rhs("(neg t)"), 0), Error);
}

TEST(CheckUniqueness, TwoStartsAgree) {
  auto d = unit_ball(0.125);
  auto b = constant_trace(d, 1.0);
  auto f = make_rhs("t");
  auto [u, r1] = solve_dirichlet(d, f, b, {}, ScalarField(d, 0.0));
  auto [v, r2] = solve_dirichlet(d, f, b, {}, sample(d, [](const Point& x) { return 3 + x[0]; }));
  ASSERT_EQ(r1.status, Status::converged);
  ASSERT_EQ(r2.status, Status::converged);
  auto r = check_uniqueness(u, v, b, r1.tol);
  EXPECT_TRUE(r.passed);
  EXPECT_GE(r.margin, -10 * r1.tol);
  expect_consistent(r);
}

TEST(LipschitzBound, LinearField) {
  auto d = unit_ball(0.0625);
  double s = 3;
  auto u = sample(d, [s](const Point& x) { return s * x[0]; });
  std::size_t c = centre(*d);
  auto r = lipschitz_bound(u, c, 0.0);
  ASSERT_TRUE(r.passed);
  auto st = stats(u);
  double k = 2 * (st.sup - st.inf_) / d->wall_distance(c) + 1;
  EXPECT_GE(k, s);
  // pairs along x0 realise the slope s exactly
  EXPECT_NEAR(r.margin, k - s, 1e-12);
}

TEST(LipschitzBound, ConstantField) {
  auto d = unit_ball(0.0625);
  auto r = lipschitz_bound(ScalarField(d, 4.0), centre(*d), 0.5);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.margin, 1 + 0.5 * d->diameter(), 1e-12);
}

TEST(LipschitzBound, SolveOfConstantRhs) {
  auto d = unit_ball(0.0625);
  auto u = solve(d, "1", constant_trace(d, 0.0));
  auto r = lipschitz_bound(u, centre(*d), 1.0);
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.margin, 0.0);
}

TEST(LipschitzBound, SmallBallIsUndetermined) {
  auto d = unit_ball(0.125);
  std::size_t edge = d->interior().front();
  for (std::size_t i : d->interior())
    if (d->wall_distance(i) < d->wall_distance(edge)) edge = i;
  auto r = lipschitz_bound(ScalarField(d, 1.0), edge, 0);
  EXPECT_EQ(r.status, "undetermined");
  EXPECT_THROW(lipschitz_bound(ScalarField(d, 1.0), d->boundary().front(), 0), Error);
}

TEST(CheckHarnack, Constant) {
  auto d = unit_ball(0.125);
  auto r = check_harnack(ScalarField(d, 2.0), 0, centre(*d), 0.4, 0);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.margin, 16.0, 1e-12);
}

TEST(CheckHarnack, InfinitySuperharmonicSolve) {
  auto d = unit_ball();
  double tol;
  auto u = solve(d, "0", make_trace(d, [](const Point& x) { return 2 + x[0]; }), &tol);
  auto r = check_harnack(u, 0, centre(*d), 0.4, harnack_tol(tol, d->spacing(), 3));
  EXPECT_TRUE(r.passed) << r.margin;
  EXPECT_GT(r.margin, 0.0);
  expect_consistent(r);
}

TEST(CheckHarnack, PositiveRhsAddsTerm) {
  auto d = unit_ball();
  double tol;
  auto u = solve(d, "1", constant_trace(d, 3.0), &tol);
  ASSERT_TRUE(check_residual(u, make_rhs("1"), build_stencil(d, 2), Side::super, tol).passed);
  double r0 = 0.4;
  auto with = check_harnack(u, 1.0, centre(*d), r0, harnack_tol(tol, d->spacing(), 3));
  auto without = check_harnack(u, 0.0, centre(*d), r0, harnack_tol(tol, d->spacing(), 3));
  EXPECT_TRUE(with.passed);
  EXPECT_NEAR(with.margin - without.margin, 12 * sigma * std::cbrt(std::pow(r0, 4)), 1e-12);
}

TEST(CheckHarnack, Preconditions) {
  auto d = unit_ball(0.125);
  EXPECT_THROW(check_harnack(ScalarField(d, 1.0), 0, centre(*d), 0.6, 0), Error);
  EXPECT_THROW(check_harnack(ScalarField(d, -1.0), 0, centre(*d), 0.2, 0), Error);
  EXPECT_THROW(check_harnack(ScalarField(d, 1.0), 0, centre(*d), 0, 0), Error);
}

TEST(CheckHarnack, CertifiedSupersolutionsWithinTolerance) {
  auto d = unit_ball(0.125);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> U(0, 1);
  auto s = build_stencil(d, 2);
  for (int k = 0; k < 6; ++k) {
    double c = 2 * U(rng) - 1, a = U(rng), base = 0.1 + sigma * std::cbrt(std::max(c, 0.0)) + a;
    auto b = make_trace(d, [&](const Point& x) { return base + a * x[0]; });
    double tol;
    auto u = solve(d, fmt12(c), b, &tol);
    ASSERT_TRUE(check_residual(u, make_rhs(fmt12(c)), s, Side::super, tol).passed);
    for (double r : {0.2, 0.3, 0.4}) {
      auto res = check_harnack(u, std::max(c, 0.0), centre(*d), r, harnack_tol(tol, d->spacing(), stats(u).sup));
      EXPECT_TRUE(res.passed) << c << " " << r << " " << res.margin;
    }
  }
}

TEST(CheckApriori, ZeroField) {
  auto d = unit_ball(0.25);
  auto r = check_apriori(ScalarField(d, 0.0), apriori_box(0, 0, 0, 0, 1), 0);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.margin, 0.0);
}

TEST(CheckApriori, NegativeConstantRhs) {
  auto d = unit_ball();
  double tol;
  auto b = constant_trace(d, 0.0);
  auto u = solve(d, "-1", b, &tol);
  auto box = apriori_box(-1, -1, b, d->radii().out_radius);
  EXPECT_DOUBLE_EQ(box.lower, 0.0);
  EXPECT_NEAR(box.upper, sigma, 1e-15);
  auto r = check_apriori(u, box, 10 * tol);
  EXPECT_TRUE(r.passed) << r.margin;
  expect_consistent(r);
}

TEST(CheckApriori, FamilyMemberReportsEitherWay) {
  auto d = unit_ball(0.0625);
  auto fam = exact_family(7, 2, d);
  auto f = make_rhs("(neg (pow t 7))");
  double lo = inf, hi = -inf;
  for (std::size_t i : d->interior()) {
    double h = eval_rhs(f, *d, i, fam.u[i]);
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  auto r = check_apriori(fam.u, apriori_box(lo, hi, trace_of(fam.u), 1.0), 1e-8);
  EXPECT_TRUE(r.status == "pass" || r.status == "fail");
  expect_consistent(r);
  EXPECT_EQ(r.witness.size(), 1u);
}

TEST(CheckResult, Json) {
  auto d = unit_ball(0.25);
  auto r = check_apriori(ScalarField(d, 0.5), Box1{0, 1}, 0);
  Json j = to_json(r);
  EXPECT_EQ(j["name"], "apriori-box");
  EXPECT_EQ(j["status"], "pass");
  EXPECT_EQ(j["margin"].get<double>(), 0.5);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"name", "status", "passed", "margin", "tol", "witness", "notes"}));
}

TEST(CheckResult, Reproducible) {
  auto d = unit_ball(0.125);
  auto u = sample(d, [](const Point& x) { return 1 + x[0] * x[0]; });
  auto a = json_text(to_json(lipschitz_bound(u, centre(*d), 0.3)));
  auto b = json_text(to_json(lipschitz_bound(u, centre(*d), 0.3)));
  EXPECT_EQ(a, b);
}
