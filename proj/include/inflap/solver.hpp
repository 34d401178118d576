#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "scheme.hpp"

namespace inflap {

enum class Status { converged, max_sweeps_reached, diverged_past_alarm };
enum class SweepOrder { lexicographic, red_black };

inline const char* name(Status s) {
  return s == Status::converged ? "converged"
         : s == Status::max_sweeps_reached ? "max_sweeps_reached"
                                           : "diverged_past_alarm";
}

struct SolveOptions {
  int max_sweeps = 100000;
  std::optional<double> tol;    // default 1e-8 (1 + |b|_inf)
  std::optional<double> theta;  // Picard damping; default 1 for monotone f, 0.5 otherwise
  SweepOrder order = SweepOrder::lexicographic;
  std::optional<double> alarm_bound;  // on sup |u|
  bool newton = true;                 // Newton polish between Gauss-Seidel blocks
  int gs_block = 20;
  SchemeParams scheme;
  std::function<void(const ScalarField&)> on_sweep;  // observer, called after every sweep
};

struct SolveReport {
  Status status = Status::max_sweeps_reached;
  int sweeps = 0;
  int newton_steps = 0;
  double residual = inf;
  double sup = 0, inf_ = 0;
  bool monotone = true;   // every sweep was pointwise nondecreasing
  bool clipped = false;   // Perron: an interior value sat on the super-solution at the end
  bool stalled = false;   // Perron: a sweep changed nothing while the residual exceeded tol
  bool saturated = false;
  double tol = 0;
};

namespace detail {

// S(t) p(t)^2 - c(t) at one node, neighbours fixed.
template <class Rhs>
double local_G(const Stencil& s, const double* u, std::size_t node, double t, Rhs&& c) {
  return operator_value(s, u, node, t) - c(t);
}

// Root of S p^2 = c with the slope frozen at the current value.
inline double frozen_root(const Stencil& s, const double* u, std::size_t node, double c, double delta_reg) {
  LocalGeometry g = steepest(s, u, node, u[node]);
  double p = 0.5 * (std::fabs(g.d_up) + std::fabs(g.d_down));
  auto sd = second_difference(s, u, node);
  return (sd.a - c / std::max(p * p, delta_reg)) / sd.b;
}

// Bracketed Illinois iteration on G, which is positive far below the root and negative
// far above it.
template <class G>
double bracket_root(G&& g, double t0, double scale) {
  double g0 = g(t0);
  if (g0 == 0) return t0;
  double step = std::max(scale, 1e-12 * (1 + std::fabs(t0)));
  double lo = t0, hi = t0, glo = g0, ghi = g0;
  int k = 0;
  if (g0 > 0) {
    for (; k < 60; ++k, step *= 2) {
      hi = t0 + step;
      ghi = g(hi);
      if (ghi <= 0) break;
      lo = hi;
      glo = ghi;
    }
  } else {
    for (; k < 60; ++k, step *= 2) {
      lo = t0 - step;
      glo = g(lo);
      if (glo >= 0) break;
      hi = lo;
      ghi = glo;
    }
  }
  if (k == 60) throw Error("bracket", "no sign change after 60 doublings");
  if (ghi == 0) return hi;
  if (glo == 0) return lo;
  double best = std::fabs(glo) < std::fabs(ghi) ? lo : hi, gbest = std::min(std::fabs(glo), std::fabs(ghi));
  int side = 0;
  for (int it = 0; it < 200 && hi - lo > 4e-16 * (1 + std::fabs(lo) + std::fabs(hi)); ++it) {
    double t = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    double gt = g(t);
    if (std::fabs(gt) < gbest) {
      gbest = std::fabs(gt);
      best = t;
    }
    if (gt == 0) return t;
    if (gt > 0) {
      lo = t;
      glo = gt;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = t;
      ghi = gt;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
  }
  return best;
}

inline double neighbour_spread(const Stencil& s, const double* u, std::size_t node) {
  double lo = u[node], hi = u[node];
  for (std::size_t k = s.begin(node); k < s.end(node); ++k) {
    lo = std::min(lo, u[s.nbr[k]]);
    hi = std::max(hi, u[s.nbr[k]]);
  }
  double l = s.len[s.begin(node)];
  return std::max(hi - lo, l * l);
}

}  // namespace detail

// Frozen-slope closed form: t = midpoint - |h|^2 c / (2 max(p^2, delta_reg)).
inline double frozen_update(std::size_t node, const ScalarField& u, double c, const Stencil& s,
                            const SchemeParams& p = {}) {
  return detail::frozen_root(s, u.v.data(), node, c, p.delta_reg);
}

// New value at an interior node. Nondecreasing f: root of the full local equation
// S(t) p(t)^2 = f(x,t). Otherwise: damped Picard step with f frozen at the current value.
inline double local_update(std::size_t node, const ScalarField& u, const RhsSpec& f, const Stencil& s,
                           const SchemeParams& p = {}, Monotone mono = Monotone::nondecreasing,
                           double theta = 1.0, bool* saturated = nullptr) {
  const double* v = u.v.data();
  const GridDomain& d = *u.dom;
  double cur = v[node];
  double spread = detail::neighbour_spread(s, v, node);
  double slope;
  operator_value(s, v, node, cur, &slope);
  auto guess = [&](double c) {
    if (slope * slope <= p.delta_reg) return cur;
    double t0 = detail::frozen_root(s, v, node, c, p.delta_reg);
    return std::isfinite(t0) ? t0 : cur;
  };
  if (mono == Monotone::nondecreasing) {
    auto c = [&](double t) { return eval_rhs(f, d, node, t, saturated); };
    return detail::bracket_root([&](double t) { return detail::local_G(s, v, node, t, c); }, guess(c(cur)), spread);
  }
  double fc = eval_rhs(f, d, node, cur, saturated);
  double t0 = guess(fc);
  double t = detail::bracket_root(
      [&](double t) { return detail::local_G(s, v, node, t, [fc](double) { return fc; }); }, t0, spread);
  return cur + theta * (t - cur);
}

namespace detail {

inline std::vector<std::size_t> sweep_order(const GridDomain& d, SweepOrder o) {
  std::vector<std::size_t> out = d.interior();
  if (o == SweepOrder::red_black) {
    auto parity = [&](std::size_t i) {
      int s = 0;
      for (int k = 0; k < d.dim(); ++k) s += d.coord(i, k);
      return s & 1;
    };
    std::stable_partition(out.begin(), out.end(), [&](std::size_t i) { return parity(i) == 0; });
  }
  return out;
}

inline double sup_residual(const ScalarField& u, const RhsSpec& f, const Stencil& s, bool* sat) {
  double r = 0;
  for (std::size_t i : u.dom->interior()) {
    double v = operator_value(s, u.v.data(), i, u[i]) - eval_rhs(f, *u.dom, i, u[i], sat);
    r = std::max(r, std::fabs(v));
    if (std::isnan(v)) return inf;
  }
  return r;
}

inline double sup_abs(const ScalarField& u) {
  double m = 0;
  for (std::size_t i = 0; i < u.v.size(); ++i)
    if (u.dom->tag(i) != Tag::exterior) m = std::max(m, std::fabs(u[i]));
  return m;
}

// One Newton step on F(u) = S p^2 - f(x,u) over the interior unknowns, with backtracking on
// the sup residual. Returns false when no step reduced the residual.
inline bool newton_step(ScalarField& u, const RhsSpec& f, const Stencil& s, const SchemeParams& p,
                        double& res, bool* sat) {
  const GridDomain& d = *u.dom;
  const auto& in = d.interior();
  std::vector<long> id(d.size(), -1);
  for (std::size_t k = 0; k < in.size(); ++k) id[in[k]] = static_cast<long>(k);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(in.size() * 20);
  Eigen::VectorXd F(in.size());
  const double* v = u.v.data();
  std::vector<double> w;
  for (std::size_t r = 0; r < in.size(); ++r) {
    std::size_t i = in[r];
    double t = v[i];
    LocalGeometry g = steepest(s, v, i, t);
    std::size_t b = s.begin(i), e = s.end(i);
    w.resize(e - b);
    pair_weights(s, v, i, w.data());
    double su = (g.d_up > 0) - (g.d_up < 0), sd = (g.d_down > 0) - (g.d_down < 0);
    double pp = 0.5 * (std::fabs(g.d_up) + std::fabs(g.d_down));
    double S = 0, diag = 0;
    for (std::size_t k = b; k < e; ++k) {
      double q = w[k - b] / (s.len[k] * s.len[k]);
      S += q * (v[s.nbr[k]] + v[s.nbr[b + s.partner[k]]] - 2 * t);
      diag += 2 * q;
    }
    auto [fv, ft] = eval_rhs_dt(f, d, i, t, sat);
    F[r] = S * pp * pp - fv;
    // weights held fixed; backtracking absorbs the error
    double P2 = std::max(pp * pp, p.delta_reg), SP = 2 * S * pp;
    auto add = [&](std::size_t j, double val) {
      if (id[j] >= 0) trip.emplace_back(static_cast<int>(r), static_cast<int>(id[j]), val);
    };
    for (std::size_t k = b; k < e; ++k) add(s.nbr[k], 2 * P2 * w[k - b] / (s.len[k] * s.len[k]));
    add(s.nbr[g.up], SP * su / (2 * s.len[g.up]));
    add(s.nbr[g.down], SP * sd / (2 * s.len[g.down]));
    add(i, -P2 * diag - SP * (su / (2 * s.len[g.up]) + sd / (2 * s.len[g.down])) - ft);
  }
  Eigen::SparseMatrix<double> J(static_cast<int>(in.size()), static_cast<int>(in.size()));
  J.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(J);
  if (lu.info() != Eigen::Success) return false;
  Eigen::VectorXd delta = lu.solve(-F);
  if (lu.info() != Eigen::Success || !delta.allFinite()) return false;
  ScalarField trial = u;
  for (double lam = 1.0; lam > 1e-6; lam *= 0.5) {
    for (std::size_t r = 0; r < in.size(); ++r) trial[in[r]] = u[in[r]] + lam * delta[r];
    bool tsat = false;
    double tr = sup_residual(trial, f, s, &tsat);
    if (tr < res) {
      u = std::move(trial);
      res = tr;
      if (sat) *sat = *sat || tsat;
      return true;
    }
  }
  return false;
}

inline void finish(SolveReport& rep, const ScalarField& u) {
  auto st = stats(u);
  rep.sup = st.sup;
  rep.inf_ = st.inf_;
}

inline double default_tol(const BoundaryTrace& b, const SolveOptions& o) {
  return o.tol ? *o.tol : 1e-8 * (1 + b.sup_abs());
}

// Gauss-Seidel with optional Newton polish from the given start.
inline SolveReport iterate(ScalarField& u, const RhsSpec& f, const Stencil& s, const SolveOptions& o,
                           double tol) {
  SolveReport rep;
  rep.tol = tol;
  const GridDomain& d = *u.dom;
  Monotone mono = effective_monotone(f, d);
  double theta = o.theta ? *o.theta : (mono == Monotone::nondecreasing ? 1.0 : 0.5);
  auto order = sweep_order(d, o.order);
  bool sat = false;
  double res = sup_residual(u, f, s, &sat);
  auto alarm = [&] { return o.alarm_bound && sup_abs(u) > *o.alarm_bound; };
  int since_newton = 0;
  bool newton_ok = o.newton;
  while (res > tol && rep.sweeps < o.max_sweeps) {
    if (alarm()) {
      rep.status = Status::diverged_past_alarm;
      break;
    }
    if (newton_ok && since_newton >= o.gs_block) {
      since_newton = 0;
      ++rep.sweeps;
      ++rep.newton_steps;
      ScalarField before = u;
      if (newton_step(u, f, s, o.scheme, res, &sat)) {
        for (std::size_t i : d.interior())
          if (u[i] < before[i]) rep.monotone = false;
        if (o.on_sweep) o.on_sweep(u);
        continue;
      }
    }
    bool up = true;
    for (std::size_t i : order) {
      double t = local_update(i, u, f, s, o.scheme, mono, theta, &sat);
      if (t < u[i]) up = false;
      u[i] = t;
    }
    rep.monotone = rep.monotone && up;
    ++rep.sweeps;
    ++since_newton;
    res = sup_residual(u, f, s, &sat);
    if (o.on_sweep) o.on_sweep(u);
    if (!std::isfinite(res)) break;
  }
  rep.residual = res;
  rep.saturated = sat;
  if (rep.status != Status::diverged_past_alarm) {
    if (res <= tol) rep.status = Status::converged;
    else if (alarm()) rep.status = Status::diverged_past_alarm;
  }
  finish(rep, u);
  return rep;
}

inline ScalarField with_boundary(DomainPtr d, const BoundaryTrace& b, double fill) {
  if (b.dom != d && !b.dom->same_as(*d)) throw Error("domain-mismatch", "boundary trace on another grid");
  ScalarField u(d, fill);
  for (std::size_t i : d->boundary()) u[i] = b[i];
  return u;
}

inline bool is_zero(const RhsSpec& f) { return f.expr.op == Op::num && f.expr.c == 0; }

}  // namespace detail

// Dirichlet solve from a caller-supplied start (boundary entries are overwritten by b).
inline std::pair<ScalarField, SolveReport> solve_dirichlet(DomainPtr d, const RhsSpec& f, const BoundaryTrace& b,
                                                           const SolveOptions& o, const ScalarField& start) {
  if (o.max_sweeps < 1) throw Error("parameter", "max_sweeps must be >= 1");
  double tol = detail::default_tol(b, o);
  if (!(tol > 0)) throw Error("parameter", "tol must be positive");
  validate_attributes(f, *d);
  auto s = build_stencil(d, o.scheme.width);
  ScalarField u = start;
  require_same_domain(u, ScalarField(d));
  for (std::size_t i : d->boundary()) u[i] = b[i];
  auto rep = detail::iterate(u, f, s, o, tol);
  return {std::move(u), rep};
}

// Dirichlet solve started from the f == 0 solve, which itself starts at the boundary mean.
inline std::pair<ScalarField, SolveReport> solve_dirichlet(DomainPtr d, const RhsSpec& f, const BoundaryTrace& b,
                                                           const SolveOptions& o) {
  double mean = 0;
  for (std::size_t i : d->boundary()) mean += b[i];
  mean /= static_cast<double>(d->boundary().size());
  ScalarField u = detail::with_boundary(d, b, mean);
  if (detail::is_zero(f)) return solve_dirichlet(d, f, b, o, u);
  SolveOptions o0 = o;
  o0.alarm_bound.reset();
  auto [h, rep0] = solve_dirichlet(d, make_rhs("0"), b, o0, u);
  auto out = solve_dirichlet(d, f, b, o, h);
  out.second.sweeps += rep0.sweeps;
  out.second.newton_steps += rep0.newton_steps;
  return out;
}

// Upward-only Gauss-Seidel from `sub`, clipped at `super`.
inline std::pair<ScalarField, SolveReport> perron_solve(DomainPtr d, const RhsSpec& f, const BoundaryTrace& b,
                                                        const ScalarField& sub, const ScalarField& super,
                                                        const SolveOptions& o) {
  if (o.max_sweeps < 1) throw Error("parameter", "max_sweeps must be >= 1");
  require_same_domain(sub, super);
  require_same_domain(sub, ScalarField(d));
  auto slack = [](double a) { return 1e-12 * (1 + std::fabs(a)); };
  for (std::size_t i = 0; i < d->size(); ++i) {
    if (d->tag(i) == Tag::exterior) continue;
    if (sub[i] > super[i] + slack(sub[i]))
      throw Error("ordering", "sub exceeds super at node " + std::to_string(i));
    if (d->tag(i) == Tag::boundary && (sub[i] > b[i] + slack(b[i]) || b[i] > super[i] + slack(b[i])))
      throw Error("ordering", "boundary data outside [sub, super] at node " + std::to_string(i));
  }
  validate_attributes(f, *d);
  double tol = detail::default_tol(b, o);
  auto s = build_stencil(d, o.scheme.width);
  Monotone mono = effective_monotone(f, *d);
  double theta = o.theta ? *o.theta : (mono == Monotone::nondecreasing ? 1.0 : 0.5);
  auto order = detail::sweep_order(*d, o.order);
  ScalarField u = sub;
  for (std::size_t i : d->boundary()) u[i] = b[i];
  SolveReport rep;
  rep.tol = tol;
  bool sat = false;
  double res = detail::sup_residual(u, f, s, &sat);
  auto alarm = [&] { return o.alarm_bound && detail::sup_abs(u) > *o.alarm_bound; };
  // upward phase: runs until a sweep changes nothing
  while (res > tol && rep.sweeps < o.max_sweeps) {
    double rise = 0;
    for (std::size_t i : order) {
      double t = local_update(i, u, f, s, o.scheme, mono, theta, &sat);
      double nt = std::min(t, super[i]);
      if (nt > u[i]) {
        rise = std::max(rise, nt - u[i]);
        u[i] = nt;
      }
    }
    ++rep.sweeps;
    res = detail::sup_residual(u, f, s, &sat);
    if (o.on_sweep) o.on_sweep(u);
    if (alarm()) {
      rep.status = Status::diverged_past_alarm;
      break;
    }
    if (rise == 0) break;
  }
  // The scheme is not exactly monotone, so the upward iterate can overshoot the discrete
  // solution at a few nodes; finish with unconstrained sweeps and report the downward moves.
  if (rep.status != Status::diverged_past_alarm && res > tol && rep.sweeps < o.max_sweeps) {
    rep.stalled = true;
    SolveOptions po = o;
    po.max_sweeps = o.max_sweeps - rep.sweeps;
    auto pr = detail::iterate(u, f, s, po, tol);
    rep.sweeps += pr.sweeps;
    rep.newton_steps += pr.newton_steps;
    rep.monotone = pr.monotone;
    sat = sat || pr.saturated;
    if (pr.status == Status::diverged_past_alarm) rep.status = pr.status;
    res = pr.residual;
  }
  rep.residual = res;
  rep.saturated = sat;
  if (rep.status != Status::diverged_past_alarm && res <= tol) rep.status = Status::converged;
  // clipping is active where the unconstrained update would leave the super-solution
  for (std::size_t i : d->interior()) {
    if (!std::isfinite(super[i]) || u[i] < super[i]) continue;
    double t = local_update(i, u, f, s, o.scheme, mono, theta);
    if (t > super[i] + 1e-9 * (1 + std::fabs(super[i]))) rep.clipped = true;
  }
  detail::finish(rep, u);
  return {std::move(u), rep};
}

// Perron iteration from the constant min(b) with no upper barrier; crossing the alarm bound is
// numerical evidence that no solution exists.
inline SolveReport probe_nonexistence(DomainPtr d, const RhsSpec& f, const BoundaryTrace& b, const SolveOptions& o) {
  if (!o.alarm_bound) throw Error("parameter", "probe_nonexistence needs alarm_bound");
  ScalarField sub = detail::with_boundary(d, b, b.ell);
  ScalarField super(d, inf);
  return perron_solve(d, f, b, sub, super, o).second;
}

}  // namespace inflap
