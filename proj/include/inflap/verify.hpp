#pragma once

#include "criteria.hpp"
#include "solver.hpp"

namespace inflap {

// Outcome of one inequality check. passed iff status == "pass" iff margin >= -tol.
struct CheckResult {
  std::string name;
  std::string status = "undetermined";  // pass | fail | undetermined
  bool passed = false;
  double margin = -inf;  // worst slack; negative is a violation
  double tol = 0;
  std::vector<std::size_t> witness;  // node(s) at the worst slack
  std::string notes;                 // hypotheses used
};

namespace detail {

inline CheckResult settle(CheckResult r) {
  r.passed = r.margin >= -r.tol;
  r.status = r.passed ? "pass" : "fail";
  return r;
}

inline CheckResult undetermined(std::string name, std::string why) {
  CheckResult r;
  r.name = std::move(name);
  r.notes = std::move(why);
  return r;
}

template <class F>
void for_closure(const GridDomain& d, F&& fn) {
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.tag(i) != Tag::exterior) fn(i);
}

}  // namespace detail

inline Json to_json(const CheckResult& r) {
  Json w = Json::array();
  for (std::size_t i : r.witness) w.push_back(i);
  return {{"name", r.name}, {"status", r.status}, {"passed", r.passed}, {"margin", ext(r.margin)},
          {"tol", r.tol},   {"witness", w},       {"notes", r.notes}};
}

// ---------------------------------------------------------------- residual certificates

enum class Side { sub, super, both };

// Certifies Delta u >= f (sub), <= f (super) or both at every interior node up to tol;
// margin = -(worst excess).
inline CheckResult check_residual(const ScalarField& u, const RhsSpec& f, const Stencil& s, Side side, double tol) {
  auto res = residual_field(u, f, s);
  CheckResult r;
  r.name = side == Side::sub ? "subsolution" : side == Side::super ? "supersolution" : "solution";
  r.tol = tol;
  double worst = -inf;
  for (std::size_t i : u.dom->interior()) {
    double e = side == Side::sub ? -res.field[i] : side == Side::super ? res.field[i] : std::fabs(res.field[i]);
    if (e > worst) {
      worst = e;
      r.witness = {i};
    }
  }
  r.margin = -worst;
  if (res.saturated) r.notes = "right-hand side saturated";
  return detail::settle(r);
}

// ---------------------------------------------------------------- comparison

enum class CompareMode { strict_ordered_rhs, signed_rhs };

// u a sub-solution and v a super-solution, either with right-hand sides f1 > f2 pointwise
// (strict_ordered_rhs) or with one common t-independent f of one sign (signed_rhs).
// margin = sup over the boundary of (u - v) - sup over the interior of (u - v).
inline CheckResult check_comparison(const ScalarField& u, const ScalarField& v, CompareMode mode, double tol,
                                    Sign rhs_sign = Sign::mixed) {
  require_same_domain(u, v);
  std::string label = mode == CompareMode::strict_ordered_rhs ? "comparison-strict" : "comparison-signed";
  if (mode == CompareMode::signed_rhs && rhs_sign == Sign::mixed)
    return detail::undetermined(label, "right-hand side changes sign; comparison is not available");
  const GridDomain& d = *u.dom;
  double bsup = -inf, isup = -inf;
  CheckResult r;
  r.name = label;
  r.tol = tol;
  for (std::size_t i : d.boundary()) bsup = std::max(bsup, u[i] - v[i]);
  for (std::size_t i : d.interior()) {
    if (u[i] - v[i] > isup) {
      isup = u[i] - v[i];
      r.witness = {i};
    }
  }
  r.margin = bsup - isup;
  r.notes = mode == CompareMode::strict_ordered_rhs ? "caller asserts f1 > f2"
                                                    : std::string("caller asserts f of sign ") + name(rhs_sign);
  return detail::settle(r);
}

// True when f1 and f2 do not depend on t and f1 > f2 at every interior node.
inline bool strictly_ordered(const RhsSpec& f1, const RhsSpec& f2, const GridDomain& d) {
  if (uses_t(f1.expr) || uses_t(f2.expr)) return false;
  for (std::size_t i : d.interior())
    if (!(eval_rhs(f1, d, i, 0.0) > eval_rhs(f2, d, i, 0.0))) return false;
  return true;
}

struct ZeroLevels {
  double lower = inf;   // inf {a : f(a) = 0}
  double upper = -inf;  // sup {a : f(a) = 0}
};

// Ends of the zero set of a nondecreasing f(t), by bisection inside [-T, T]. A zero set reaching
// the probe edge is taken as unbounded; no zero gives the empty-set values (+inf, -inf).
// Values that underflow to 0 count as zeros (e^t vanishes below t = -745).
inline ZeroLevels zero_levels(const std::function<double(double)>& f, double T = 1e6) {
  ZeroLevels z;
  double lo = -T, hi = T, flo = f(lo), fhi = f(hi);
  if (flo > 0 || fhi < 0) return z;
  // a point of the zero set, or the crossing of a strictly increasing f
  double a = lo, b = hi, zero = NAN;
  if (flo == 0) zero = lo;
  else if (fhi == 0) zero = hi;
  for (int k = 0; k < 400 && std::isnan(zero); ++k) {
    double m = 0.5 * (a + b), fm = f(m);
    if (fm == 0) zero = m;
    else if (fm < 0) a = m;
    else b = m;
    if (b - a <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(m))) zero = 0.5 * (a + b);
  }
  auto edge = [&](double in, double out) {  // f(in) == 0, f(out) != 0
    for (int k = 0; k < 400; ++k) {
      double m = 0.5 * (in + out);
      if (m == in || m == out) break;
      (f(m) == 0 ? in : out) = m;
    }
    return in;
  };
  if (f(zero) != 0) {  // strictly increasing through the crossing
    z.lower = z.upper = zero;
    return z;
  }
  z.lower = flo == 0 ? -inf : edge(zero, lo);
  z.upper = fhi == 0 ? inf : edge(zero, hi);
  return z;
}

// u, v sub- and super-solution of Delta w = f(w) with f(t) nondecreasing. Either
// sup_bdry u <= inf_bdry v, or u <= v on the boundary together with v >= upper zero level or
// u <= lower zero level there; with no finite zero level u <= v on the boundary suffices.
// margin = min over the interior of (v - u).
inline CheckResult check_monotone_comparison(const ScalarField& u, const ScalarField& v, const RhsSpec& f,
                                             double tol, std::optional<ZeroLevels> levels = {}) {
  require_same_domain(u, v);
  const GridDomain& d = *u.dom;
  if (x_leaves(f.expr)) throw Error("attribute", "monotone comparison needs f = f(t)");
  if (effective_monotone(f, d) != Monotone::nondecreasing) throw Error("attribute", "f must be nondecreasing in t");
  ZeroLevels z = levels ? *levels : zero_levels([&](double t) { return eval_rhs(f, nullptr, 0, t); });
  double usup = -inf, vinf = inf, gap = -inf;
  for (std::size_t i : d.boundary()) {
    usup = std::max(usup, u[i]);
    vinf = std::min(vinf, v[i]);
    gap = std::max(gap, u[i] - v[i]);
  }
  std::string how;
  bool finite_level = std::isfinite(z.lower) || std::isfinite(z.upper);
  if (usup <= vinf + tol) how = "sup_bdry u <= inf_bdry v";
  else if (gap <= tol && !finite_level) how = "u <= v on bdry, no finite zero level";
  else if (gap <= tol && vinf >= z.upper - tol) how = "u <= v on bdry, v >= upper zero level";
  else if (gap <= tol && usup <= z.lower + tol) how = "u <= v on bdry, u <= lower zero level";
  else return detail::undetermined("comparison-monotone", "no comparison hypothesis holds on the boundary");
  CheckResult r;
  r.name = "comparison-monotone";
  r.tol = tol;
  r.notes = how;
  r.margin = inf;
  for (std::size_t i : d.interior()) {
    if (v[i] - u[i] < r.margin) {
      r.margin = v[i] - u[i];
      r.witness = {i};
    }
  }
  return detail::settle(r);
}

// Two solutions of the same problem with f(t) nondecreasing differ by at most the oscillation
// of the boundary data. margin = osc b - sup |u - v|.
inline CheckResult check_uniqueness(const ScalarField& u, const ScalarField& v, const BoundaryTrace& b, double tol) {
  require_same_domain(u, v);
  CheckResult r;
  r.name = "uniqueness-oscillation";
  r.tol = tol;
  double worst = -1;
  detail::for_closure(*u.dom, [&](std::size_t i) {
    if (std::fabs(u[i] - v[i]) > worst) {
      worst = std::fabs(u[i] - v[i]);
      r.witness = {i};
    }
  });
  r.margin = oscillation(b) - worst;
  return detail::settle(r);
}

// ---------------------------------------------------------------- local Lipschitz bound

// |u(x) - u(y)| <= k |x - y| on B_{r/3}(x0), k = 2(M - m)/r + 1 + |alpha| diam, with r the
// distance from x0 to the nearest non-interior node. margin = min over pairs of k - slope.
inline CheckResult lipschitz_bound(const ScalarField& u, std::size_t x0, double alpha, double tol = 0) {
  const GridDomain& d = *u.dom;
  if (d.tag(x0) != Tag::interior) throw Error("parameter", "x0 must be an interior node");
  double r = d.wall_distance(x0);
  if (r / 3 < 2 * d.spacing()) return detail::undetermined("lipschitz", "ball B_{r/3}(x0) is below two grid cells");
  auto st = stats(u);
  double k = 2 * (st.sup - st.inf_) / r + 1 + std::fabs(alpha) * d.diameter();
  int n = d.dim();
  Point c = d.point(x0);
  std::vector<std::size_t> nodes;
  std::vector<Point> pts;
  detail::for_closure(d, [&](std::size_t i) {
    Point x = d.point(i);
    if (distance(x.data(), c.data(), n) <= r / 3) {
      nodes.push_back(i);
      pts.push_back(std::move(x));
    }
  });
  CheckResult out;
  out.name = "lipschitz";
  out.tol = tol;
  out.notes = "k = " + fmt12(k) + ", r = " + fmt12(r);
  out.margin = inf;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      double slope = std::fabs(u[nodes[a]] - u[nodes[b]]) / distance(pts[a].data(), pts[b].data(), n);
      if (k - slope < out.margin) {
        out.margin = k - slope;
        out.witness = {nodes[a], nodes[b]};
      }
    }
  return detail::settle(out);
}

// ---------------------------------------------------------------- Harnack

// Tolerance for the Harnack check on fields certified to `solver_tol`: (9 + 1) solver_tol
// plus a consistency allowance h^(1/3) * scale.
inline double harnack_tol(double solver_tol, double h, double scale) {
  return 10 * solver_tol + std::cbrt(h) * scale;
}

// For u >= 0 with Delta u <= h(x), sup h+ = h_sup_plus, and B_{2r}(z) inside the domain:
// margin = 9 inf_B u + 12 sigma (r^4 h_sup_plus)^(1/3) - sup_B u over nodes of B = B_{2r/3}(z).
inline CheckResult check_harnack(const ScalarField& u, double h_sup_plus, std::size_t z, double r, double tol) {
  const GridDomain& d = *u.dom;
  if (!(r > 0)) throw Error("parameter", "Harnack radius must be positive");
  if (d.tag(z) != Tag::interior || d.wall_distance(z) < 2 * r)
    throw Error("geometry", "B_2r(z) is not contained in the domain");
  detail::for_closure(d, [&](std::size_t i) {
    if (u[i] < -tol) throw Error("parameter", "Harnack check needs u >= 0");
  });
  int n = d.dim();
  Point c = d.point(z);
  double lo = inf, hi = -inf;
  std::size_t ilo = z, ihi = z;
  detail::for_closure(d, [&](std::size_t i) {
    if (distance(d.point(i).data(), c.data(), n) > 2 * r / 3) return;
    if (u[i] < lo) lo = u[i], ilo = i;
    if (u[i] > hi) hi = u[i], ihi = i;
  });
  CheckResult out;
  out.name = "harnack";
  out.tol = tol;
  out.margin = 9 * lo + 12 * sigma * std::cbrt(std::pow(r, 4) * std::max(h_sup_plus, 0.0)) - hi;
  out.witness = {ilo, ihi};
  out.notes = "sup_B " + fmt12(hi) + ", inf_B " + fmt12(lo);
  return detail::settle(out);
}

// ---------------------------------------------------------------- a priori box

inline CheckResult check_apriori(const ScalarField& u, const Box1& box, double tol) {
  CheckResult r;
  r.name = "apriori-box";
  r.tol = tol;
  r.margin = inf;
  detail::for_closure(*u.dom, [&](std::size_t i) {
    double s = std::min(u[i] - box.lower, box.upper - u[i]);
    if (s < r.margin) {
      r.margin = s;
      r.witness = {i};
    }
  });
  r.notes = "box [" + fmt12(box.lower) + ", " + fmt12(box.upper) + "]";
  return detail::settle(r);
}

}  // namespace inflap
