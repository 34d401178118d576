#pragma once

#include <optional>

#include "io.hpp"
#include "radial.hpp"

namespace inflap {

// Limit conditions are decided from finite probes, so a condition can come back undetermined.
enum class Tri { yes, no, undetermined };

inline const char* name(Tri t) { return t == Tri::yes ? "yes" : t == Tri::no ? "no" : "undetermined"; }

// ---------------------------------------------------------------- small-diameter existence

// C(eta) = max{(sup f+ on [ell - eta, ell])^(1/3), -(inf f- on [L, L + eta])^(1/3)}
inline double c_eta(const RhsSpec& f, const GridDomain& d, double ell, double L, double eta,
                    bool* estimate = nullptr) {
  if (!(eta >= 0)) throw Error("parameter", "eta must be >= 0");
  Range lo = rhs_range(f, d, ell - eta, ell), hi = rhs_range(f, d, L, L + eta);
  if (estimate) *estimate = *estimate || lo.estimate || hi.estimate;
  return std::max(std::cbrt(std::max(lo.hi, 0.0)), -std::cbrt(std::min(hi.lo, 0.0)));
}

struct DiamThreshold {
  double value = 0;     // sup over eta of (eta / (sigma C(eta)))^(3/4); +inf when some C(eta) = 0
  double eta_star = 0;  // maximiser
  double C_star = 0;
  bool estimate = false;
  std::vector<std::pair<double, double>> table;  // (eta, C(eta)) on the coarse probe grid
};

// Coarse log grid over [1e-6, eta_max], then golden-section on log eta around the best point.
inline DiamThreshold diam_threshold(const RhsSpec& f, const GridDomain& d, double ell, double L,
                                    double eta_max = 1e3, int grid = 91) {
  DiamThreshold out;
  auto C = [&](double eta) { return c_eta(f, d, ell, L, eta, &out.estimate); };
  auto g = [&](double c, double eta) { return std::pow(eta / (sigma * c), 0.75); };
  double lo = std::log(1e-6), hi = std::log(eta_max);
  int best = -1;
  double best_v = -1;
  for (int k = 0; k < grid; ++k) {
    double eta = std::exp(lo + (hi - lo) * k / (grid - 1.0));
    double c = C(eta);
    out.table.emplace_back(eta, c);
    if (c == 0) {
      out.value = inf;
      out.eta_star = eta;
      out.C_star = 0;
      return out;
    }
    double v = g(c, eta);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  double step = (hi - lo) / (grid - 1.0);
  double a = std::max(lo, lo + (best - 1) * step), b = std::min(hi, lo + (best + 1) * step);
  const double phi = 0.5 * (std::sqrt(5.0) - 1);
  auto val = [&](double s) {
    double eta = std::exp(s);
    return g(C(eta), eta);
  };
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a), f1 = val(x1), f2 = val(x2);
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = val(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = val(x1);
    }
  }
  double s = 0.5 * (a + b), eta = std::exp(s);
  out.eta_star = eta;
  out.C_star = C(eta);
  out.value = std::max(best_v, g(out.C_star, eta));
  if (out.value == best_v) {
    out.eta_star = out.table[best].first;
    out.C_star = out.table[best].second;
  }
  return out;
}

// Sub- and super-solution cones C(sigma |x - z|^(4/3) + d) and C(d - sigma |x - z|^(4/3)) with
// z a boundary node, C = C(delta) at the maximising delta and d the midpoint of its admissible
// interval. When C(delta) = 0 the constants ell and L are returned.
struct Cones {
  ScalarField sub, super;
  double C = 0, delta = 0, d_sub = 0, d_sup = 0;
  Point z;
};

inline Cones theorem_cones(DomainPtr d, const RhsSpec& f, const BoundaryTrace& b, double eta_max = 1e3) {
  auto th = diam_threshold(f, *d, b.ell, b.L, eta_max);
  Cones c;
  c.z = d->point(d->boundary().front());
  c.delta = th.eta_star;
  c.C = th.C_star;
  if (c.C == 0) {
    c.sub = ScalarField(d, b.ell);
    c.super = ScalarField(d, b.L);
    return c;
  }
  double s = sigma * std::pow(d->diameter(), 4.0 / 3.0);
  double lo_sub = (b.ell - c.delta) / c.C, hi_sub = b.ell / c.C - s;
  double lo_sup = b.L / c.C + s, hi_sup = (b.L + c.delta) / c.C;
  if (lo_sub > hi_sub || lo_sup > hi_sup)
    throw Error("parameter", "diameter " + std::to_string(d->diameter()) + " exceeds the cone threshold " +
                                 std::to_string(th.value));
  c.d_sub = 0.5 * (lo_sub + hi_sub);
  c.d_sup = 0.5 * (lo_sup + hi_sup);
  int n = d->dim();
  auto r43 = [&](const Point& x) { return sigma * std::pow(distance(x.data(), c.z.data(), n), 4.0 / 3.0); };
  c.sub = sample(d, [&](const Point& x) { return c.C * (r43(x) + c.d_sub); });
  c.super = sample(d, [&](const Point& x) { return c.C * (c.d_sup - r43(x)); });
  return c;
}

// ---------------------------------------------------------------- large-inradius non-existence
// These criteria use the form Delta u = -g(x, u) with g >= 0.

struct NonexistenceRadius {
  double radius = inf;  // M_f / sqrt 2, +inf when the probe suggests M_f = inf
  double M_f = inf;
  double a_star = 0;    // probe point attaining the largest zeta
  bool tail_bounded = false;
};

// zeta(a) on a = ell + 10^(-6 .. 6), 10 points per decade. The tail is trusted when the upper
// bound (4/3)((a - ell)^4 / H(a))^(1/4) does not grow across the last decade probed.
inline NonexistenceRadius nonexistence_radius(const MonotoneRhs1D& m) {
  if (!m.positive) throw Error("attribute", "h must be positive on (ell, inf)");
  NonexistenceRadius out;
  std::vector<double> upper;
  double best = -1;
  for (int k = -60; k <= 60; ++k) {
    double a = m.ell + std::pow(10.0, k / 10.0);
    if (!(m.h(a) < 1e250)) break;
    double z, ub;
    try {
      z = zeta(m, a, 1.0);
      ub = zeta_bounds(m, a, m.ell).upper;
    } catch (const Error& e) {
      if (e.kind() == "saturation") break;
      throw;
    }
    upper.push_back(ub);
    if (z > best) {
      best = z;
      out.a_star = a;
    }
  }
  if (upper.size() < 11) return out;
  out.tail_bounded = true;
  for (std::size_t i = upper.size() - 10; i < upper.size(); ++i)
    if (upper[i] > upper[i - 1] * (1 + 1e-9)) out.tail_bounded = false;
  if (!out.tail_bounded) return out;
  out.M_f = best;
  out.radius = best * inv_sqrt2;
  return out;
}

// h1(t) = inf of g over the domain x [t, inf), probed on [t, t + 1e7] in decade pieces.
inline double lower_envelope(const RhsSpec& g, const GridDomain& d, double t) {
  double v = rhs_range(g, d, t, t + 1).lo;
  for (int k = 0; k < 7; ++k) v = std::min(v, rhs_range(g, d, t + std::pow(10.0, k), t + std::pow(10.0, k + 1)).lo);
  return v;
}

// h2(t) = sup of g over the domain x [ell, t]
inline double upper_envelope(const RhsSpec& g, const GridDomain& d, double ell, double t) {
  return rhs_range(g, d, ell, t).hi;
}

struct Dd3 {
  Tri cond_i = Tri::undetermined, cond_ii = Tri::undetermined;
  std::vector<double> growth;  // h2(t) / t^3 at the probe points
};

// (i) via integrability of H1^(-1/4) on (ell, ell + 1): on dyadic pieces [ell + 2^-(j+1), ell + 2^-j]
// the piece integral is at most w_j H1(lo_j)^(-1/4), with H1(lo_j) bounded below by a left Riemann
// sum of the nondecreasing h1. Geometric decay of these bounds over the last 10 pieces means yes;
// anything else is undetermined.
// (ii) via h2(t) / t^3 at t = max(ell, 0) + 10^j, j = 1..6: nonincreasing and below 1e-3 at the
// end means yes, no decay at all means no.
inline Dd3 dd3_check(const RhsSpec& g, const GridDomain& d, double ell) {
  Dd3 out;
  const int J = 60;
  std::vector<double> lo(J + 1), w(J + 1), hmin(J + 1);
  for (int j = 0; j <= J; ++j) {
    lo[j] = ell + std::ldexp(1.0, -(j + 1));
    w[j] = std::ldexp(1.0, -(j + 1));
    hmin[j] = std::max(lower_envelope(g, d, lo[j]), 0.0);
  }
  std::vector<double> bound(J + 1);
  double H = 0;
  for (int j = J; j >= 0; --j) {
    bound[j] = H > 0 ? w[j] / std::pow(H, 0.25) : inf;
    H += w[j] * hmin[j];
  }
  out.cond_i = Tri::yes;
  // bound[J] has nothing below it and is +inf
  for (int j = J - 11; j < J - 1; ++j)
    if (!(bound[j + 1] <= (1 - 1e-6) * bound[j])) out.cond_i = Tri::undetermined;

  double base = std::max(ell, 0.0);
  for (int j = 1; j <= 6; ++j) {
    double t = base + std::pow(10.0, j);
    out.growth.push_back(upper_envelope(g, d, ell, t) / (t * t * t));
  }
  bool down = true;
  for (std::size_t j = 1; j < out.growth.size(); ++j)
    if (out.growth[j] > out.growth[j - 1]) down = false;
  if (down && out.growth.back() < 1e-3) out.cond_ii = Tri::yes;
  else if (out.growth.back() >= out.growth.front() && out.growth.front() > 0) out.cond_ii = Tri::no;
  return out;
}

// ---------------------------------------------------------------- a priori bounds

struct Box1 {
  double lower = 0, upper = 0;
};

// Bracket for Delta u = h(x) with h in [h_lo, h_hi], boundary data in [ell, L], out-radius R.
inline Box1 apriori_box(double h_lo, double h_hi, double ell, double L, double R) {
  if (h_lo > h_hi) throw Error("parameter", "apriori_box needs h_lo <= h_hi");
  if (R < 0) throw Error("parameter", "apriori_box needs R >= 0");
  double r43 = std::pow(R, 4.0 / 3.0);
  return {ell - sigma * std::cbrt(std::max(h_hi, 0.0)) * r43, L - sigma * std::cbrt(std::min(h_lo, 0.0)) * r43};
}

inline Box1 apriori_box(double h_lo, double h_hi, const BoundaryTrace& b, double R) {
  return apriori_box(h_lo, h_hi, b.ell, b.L, R);
}

struct GrowthClass {
  double beta_est = -inf, alpha_est = -inf;
  double t_alpha = -inf, t_beta = inf;
  bool applicable = false;
  double lower() const { return 2 * t_alpha; }
  double upper() const { return 2 * t_beta; }
};

// beta_est = min over t = 10^4..10^6 of inf f(., t) / t^3, alpha_est likewise with sup f(., -t) / (-t)^3.
// With eps = (2 sigma R^(4/3))^-3, t_beta is the first rung of max(0, L) + 10^(k/8) from which every
// later rung interval satisfies inf f >= -eps t_k^3 (t_k its left end), up to 10^6; t_alpha mirrors it.
inline GrowthClass growth_class(const RhsSpec& f, const GridDomain& d, double ell, double L, double R,
                                double probe_tol = 1e-9) {
  GrowthClass g;
  for (int j = 4; j <= 6; ++j) {
    double t = std::pow(10.0, j), t3 = t * t * t;
    g.beta_est = j == 4 ? rhs_range(f, d, t, t).lo / t3 : std::min(g.beta_est, rhs_range(f, d, t, t).lo / t3);
    double a = rhs_range(f, d, -t, -t).hi / -t3;
    g.alpha_est = j == 4 ? a : std::min(g.alpha_est, a);
  }
  if (g.beta_est < -probe_tol || g.alpha_est < -probe_tol) return g;
  double eps = std::pow(2 * sigma * std::pow(R, 4.0 / 3.0), -3.0);
  const int k0 = -24, k1 = 48;
  auto rung = [](double base, int k) { return base + std::pow(10.0, k / 8.0); };
  double up = std::max(0.0, L), dn = std::min(0.0, ell);
  int kb = k1;
  for (int k = k1 - 1; k >= k0; --k) {
    double t = rung(up, k), t1 = rung(up, k + 1);
    if (rhs_range(f, d, t, t1).lo < -eps * t * t * t) break;
    kb = k;
  }
  int ka = k1;
  for (int k = k1 - 1; k >= k0; --k) {
    double t = -rung(-dn, k), t1 = -rung(-dn, k + 1);
    if (rhs_range(f, d, t1, t).hi > -eps * t * t * t) break;
    ka = k;
  }
  if (kb == k1 || ka == k1) return g;
  g.t_beta = rung(up, kb);
  g.t_alpha = -rung(-dn, ka);
  g.applicable = true;
  return g;
}

// ---------------------------------------------------------------- cubic right-hand sides

struct CubicSmallness {
  bool flag = false;               // sigma^3 a_sup R^4 < 1
  std::optional<double> M_bound;   // sup |u| bound when flag holds
  bool only_zero = false;          // flag and b = 0
};

// For Delta u = -a(x) u^3 with |a| <= a_sup, out-radius R, boundary data in [ell, L].
inline CubicSmallness cubic_smallness(double a_sup, double R, double ell, double L) {
  if (a_sup < 0) throw Error("parameter", "a_sup must be >= 0");
  CubicSmallness c;
  c.flag = sigma_cubed * a_sup * std::pow(R, 4) < 1;
  if (c.flag) {
    c.M_bound = std::max(-ell, L) / (1 - sigma * std::cbrt(a_sup) * std::pow(R, 4.0 / 3.0));
    c.only_zero = ell == 0 && L == 0;
  }
  return c;
}

inline CubicSmallness cubic_smallness(double a_sup, double R, const BoundaryTrace& b) {
  return cubic_smallness(a_sup, R, b.ell, b.L);
}

struct EigenBracket {
  double lower = 0, upper = inf;
  double alpha_star = 0, rho_star = 0;
  bool upper_needs_positive = true;  // the upper bound holds for positive eigenfunctions only
};

// Bracket for Delta u = -lambda a(x) u^3, u = 0 on the boundary, with a sampled on interior nodes.
// Level sets {a > alpha M} for alpha = 0.05 .. 0.95 and {a >= M} for alpha = 1; their in-radius is
// the analytic one when the set is the whole interior, otherwise the grid distance to the nearest
// excluded node less h/2.
inline EigenBracket eigen_bracket(const ScalarField& a) {
  const GridDomain& d = *a.dom;
  double M = 0;
  for (std::size_t i : d.interior()) {
    if (a[i] < 0) throw Error("parameter", "eigen weight must be >= 0");
    M = std::max(M, a[i]);
  }
  if (M == 0) throw Error("parameter", "eigen weight vanishes identically");
  EigenBracket e;
  double R = d.radii().out_radius;
  e.lower = 1 / (sigma_cubed * M * std::pow(R, 4));
  double best = inf;
  for (int k = 1; k <= 20; ++k) {
    double alpha = k / 20.0;
    std::vector<char> member(d.size(), 0);
    std::size_t count = 0;
    for (std::size_t i : d.interior()) {
      bool in = k == 20 ? a[i] >= M : a[i] > alpha * M;
      member[i] = in;
      count += in;
    }
    if (!count) continue;
    double rho = count == d.interior().size() ? d.radii().in_radius
                                              : d.subset_in_radius(member).first - 0.5 * d.spacing();
    if (!(rho > 0)) continue;
    double v = 1 / (alpha * std::pow(rho, 4));
    if (v < best) {
      best = v;
      e.alpha_star = alpha;
      e.rho_star = rho;
    }
  }
  e.upper = 4 * std::pow(4.0 / 3.0, 3) / (sigma_cubed * M) * best;
  return e;
}

inline EigenBracket eigen_bracket(const RhsSpec& a, DomainPtr d) {
  if (uses_t(a.expr)) throw Error("parameter", "eigen weight must not depend on t");
  ScalarField w(d);
  for (std::size_t i : d->interior()) w[i] = eval_rhs(a, *d, i, 0.0);
  return eigen_bracket(w);
}

// f(x, t) = c(x) t^3 on the interior, checked at a few t; returns c or nothing.
inline std::optional<ScalarField> cubic_coefficient(const RhsSpec& f, DomainPtr d) {
  ScalarField c(d);
  for (std::size_t i : d->interior()) {
    c[i] = eval_rhs(f, *d, i, 1.0);
    for (double t : {-2.0, 0.5, 3.0}) {
      double v = eval_rhs(f, *d, i, t), e = c[i] * t * t * t;
      if (std::fabs(v - e) > 1e-12 * (1 + std::fabs(e))) return std::nullopt;
    }
  }
  return c;
}

// ---------------------------------------------------------------- report

struct Verdict {
  std::string theorem, status, details;  // status: applies | fails | undetermined
};

struct CriteriaOptions {
  double eta_max = 1e3;
  double growth_probe_tol = 1e-9;
};

struct CriteriaReport {
  double ell = 0, L = 0;
  DiamThreshold diam;
  double diam_actual = 0;
  double M_f = inf, nonexistence_radius = inf, in_radius_actual = 0;
  std::string nonexistence_form;  // how f was brought to Delta u = -g(x, u), g >= 0
  Dd3 dd3;
  GrowthClass growth;
  std::optional<Box1> apriori;
  std::optional<CubicSmallness> cubic;
  std::optional<EigenBracket> eigen;
  std::vector<Verdict> verdicts;
};

namespace detail {

inline Expr reflect_t(const Expr& e) {
  if (e.op == Op::t) return Expr{Op::neg, 0, 0, "", {e}};
  Expr c = e;
  for (auto& k : c.kids) k = reflect_t(k);
  return c;
}

// Sign of f over the domain x [-1e6, 1e6], probed in decade pieces.
inline Sign probe_sign(const RhsSpec& f, const GridDomain& d) {
  double lo = inf, hi = -inf;
  auto take = [&](double a, double b) {
    Range r = rhs_range(f, d, a, b);
    lo = std::min(lo, r.lo);
    hi = std::max(hi, r.hi);
  };
  take(-1, 1);
  for (int k = 0; k < 6; ++k) {
    take(std::pow(10.0, k), std::pow(10.0, k + 1));
    take(-std::pow(10.0, k + 1), -std::pow(10.0, k));
  }
  if (lo >= 0) return Sign::nonneg;
  if (hi <= 0) return Sign::nonpos;
  return Sign::mixed;
}

// h(t) = inf of g over the domain x [t, inf). A t-only g that probes nondecreasing is its own
// envelope; otherwise the envelope is tabulated on a log grid and interpolated linearly.
inline MonotoneRhs1D envelope_rhs(const RhsSpec& g, DomainPtr d, double ell) {
  if (!x_leaves(g.expr)) {
    try {
      return make_monotone_rhs([g](double t) { return eval_rhs(g, nullptr, 0, t); }, ell);
    } catch (const Error&) {
    }
  }
  auto ts = std::make_shared<std::vector<double>>(), hs = std::make_shared<std::vector<double>>();
  ts->push_back(ell);
  hs->push_back(lower_envelope(g, *d, ell));
  for (int k = -70; k <= 70; ++k) {
    ts->push_back(ell + std::pow(10.0, k / 10.0));
    hs->push_back(std::max(hs->back(), lower_envelope(g, *d, ts->back())));
  }
  return make_monotone_rhs(
      [ts, hs](double t) {
        if (t <= ts->front()) return hs->front();
        if (t >= ts->back()) return hs->back();
        auto it = std::upper_bound(ts->begin(), ts->end(), t);
        std::size_t i = static_cast<std::size_t>(it - ts->begin());
        double w = (t - (*ts)[i - 1]) / ((*ts)[i] - (*ts)[i - 1]);
        return (1 - w) * (*hs)[i - 1] + w * (*hs)[i];
      },
      ell);
}

}  // namespace detail

inline CriteriaReport criteria_report(const RhsSpec& f, DomainPtr d, const BoundaryTrace& b,
                                      const CriteriaOptions& opt = {}) {
  CriteriaReport r;
  r.ell = b.ell;
  r.L = b.L;
  double R = d->radii().out_radius;
  r.diam_actual = d->diameter();
  r.in_radius_actual = d->radii().in_radius;
  auto add = [&](std::string th, std::string st, std::string det) { r.verdicts.push_back({th, st, det}); };

  r.diam = diam_threshold(f, *d, b.ell, b.L, opt.eta_max);
  {
    std::string det = "diameter " + fmt12(r.diam_actual) + " vs threshold " +
                      (std::isinf(r.diam.value) ? std::string("+inf") : fmt12(r.diam.value));
    if (r.diam.estimate) add("existence-small-diameter", "undetermined", det + "; sampled f range");
    else add("existence-small-diameter", r.diam_actual < r.diam.value ? "applies" : "fails", det);
  }

  Sign sg = detail::probe_sign(f, *d);
  std::optional<RhsSpec> g;
  double ell_g = 0;
  if (sg == Sign::nonpos) {
    g = f;
    g->expr = Expr{Op::neg, 0, 0, "", {f.expr}};
    ell_g = b.ell;
    r.nonexistence_form = "g(x,t) = -f(x,t), ell = inf b";
  } else if (sg == Sign::nonneg) {
    g = f;
    g->expr = detail::reflect_t(f.expr);
    ell_g = -b.L;
    r.nonexistence_form = "u -> -u, g(x,t) = f(x,-t), ell = -sup b";
  }
  if (!g) {
    add("nonexistence-large-inradius", "fails", "f changes sign");
    add("existence-positive-solution", "fails", "f changes sign");
  } else {
    MonotoneRhs1D m = detail::envelope_rhs(*g, d, ell_g);
    if (!m.positive) {
      add("nonexistence-large-inradius", "fails", "h vanishes somewhere on (ell, inf)");
    } else {
      auto nr = nonexistence_radius(m);
      r.M_f = nr.M_f;
      r.nonexistence_radius = nr.radius;
      if (std::isinf(nr.radius))
        add("nonexistence-large-inradius", "undetermined", "zeta probe does not settle; M_f may be infinite");
      else
        add("nonexistence-large-inradius", r.in_radius_actual > nr.radius ? "applies" : "fails",
            "in-radius " + fmt12(r.in_radius_actual) + " vs M_f/sqrt(2) = " + fmt12(nr.radius) +
                " (probe estimate of M_f)");
    }
    r.dd3 = dd3_check(*g, *d, ell_g);
    std::string det = std::string("cond_i ") + name(r.dd3.cond_i) + ", cond_ii " + name(r.dd3.cond_ii);
    if (!m.positive) add("existence-positive-solution", "fails", det + "; h vanishes on (ell, inf)");
    else if (r.dd3.cond_i == Tri::yes && r.dd3.cond_ii == Tri::yes) add("existence-positive-solution", "applies", det);
    else if (r.dd3.cond_i == Tri::no || r.dd3.cond_ii == Tri::no) add("existence-positive-solution", "fails", det);
    else add("existence-positive-solution", "undetermined", det);
  }

  r.growth = growth_class(f, *d, b.ell, b.L, R, opt.growth_probe_tol);
  {
    std::string det = "beta_est " + fmt12(r.growth.beta_est) + ", alpha_est " + fmt12(r.growth.alpha_est);
    if (r.growth.applicable) add("existence-growth", "applies", det);
    else if (r.growth.beta_est < -opt.growth_probe_tol || r.growth.alpha_est < -opt.growth_probe_tol)
      add("existence-growth", "fails", det);
    else add("existence-growth", "undetermined", det + "; no threshold found up to 1e6");
  }

  if (!uses_t(f.expr)) {
    Range hr = rhs_range(f, *d, 0, 0);
    r.apriori = apriori_box(hr.lo, hr.hi, b, R);
    add("apriori-box", "applies", "f independent of t");
  } else if (r.growth.applicable) {
    r.apriori = Box1{r.growth.lower(), r.growth.upper()};
    add("apriori-box", "applies", "from the growth thresholds");
  } else {
    add("apriori-box", "undetermined", "f depends on t and the growth test did not apply");
  }

  if (auto c = cubic_coefficient(f, d)) {
    ScalarField a = *c;
    double a_sup = 0;
    bool nonneg = true, nonzero = false;
    for (std::size_t i : d->interior()) {
      a[i] = -a[i];
      a_sup = std::max(a_sup, std::fabs(a[i]));
      nonneg = nonneg && a[i] >= 0;
      nonzero = nonzero || a[i] != 0;
    }
    r.cubic = cubic_smallness(a_sup, R, b);
    add("cubic-smallness", r.cubic->flag ? "applies" : "fails",
        r.cubic->only_zero ? "u = 0 is the only solution" : "sigma^3 sup|a| R^4 = " + fmt12(sigma_cubed * a_sup * std::pow(R, 4)));
    if (nonneg && nonzero) {
      r.eigen = eigen_bracket(a);
      add("eigen-bracket", "applies", "upper bound holds for positive eigenfunctions only");
    }
  }
  return r;
}

inline Json to_json(const CriteriaReport& r) {
  Json j;
  j["ell"] = r.ell;
  j["L"] = r.L;
  Json table = Json::array();
  for (auto [eta, c] : r.diam.table) table.push_back(Json::array({eta, c}));
  j["C_eta"] = table;
  j["diam_threshold"] = ext(r.diam.value);
  j["eta_star"] = r.diam.eta_star;
  j["diam_actual"] = r.diam_actual;
  j["M_f"] = ext(r.M_f);
  j["nonexistence_radius"] = ext(r.nonexistence_radius);
  j["in_radius_actual"] = r.in_radius_actual;
  j["nonexistence_form"] = r.nonexistence_form;
  Json growth = Json::array();
  for (double v : r.dd3.growth) growth.push_back(ext(v));
  j["dd3"] = {{"cond_i", name(r.dd3.cond_i)}, {"cond_ii", name(r.dd3.cond_ii)}, {"growth_ratios", growth}};
  j["growth"] = {{"beta_est", ext(r.growth.beta_est)},
                 {"alpha_est", ext(r.growth.alpha_est)},
                 {"t_alpha", ext(r.growth.t_alpha)},
                 {"t_beta", ext(r.growth.t_beta)},
                 {"applicable", r.growth.applicable}};
  j["apriori_box"] = r.apriori ? Json{{"lower", r.apriori->lower}, {"upper", r.apriori->upper}} : Json(nullptr);
  if (r.cubic) {
    j["cubic"] = {{"flag", r.cubic->flag},
                  {"M_bound", r.cubic->M_bound ? Json(*r.cubic->M_bound) : Json(nullptr)},
                  {"only_zero", r.cubic->only_zero}};
  } else {
    j["cubic"] = nullptr;
  }
  if (r.eigen) {
    j["eigen"] = {{"lower", r.eigen->lower},
                  {"upper", ext(r.eigen->upper)},
                  {"alpha_star", r.eigen->alpha_star},
                  {"rho_star", r.eigen->rho_star},
                  {"upper_needs_positive", r.eigen->upper_needs_positive}};
  } else {
    j["eigen"] = nullptr;
  }
  Json v = Json::array();
  for (const auto& x : r.verdicts) v.push_back({{"theorem", x.theorem}, {"status", x.status}, {"details", x.details}});
  j["verdicts"] = v;
  return j;
}

}  // namespace inflap
