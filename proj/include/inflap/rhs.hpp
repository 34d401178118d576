#pragma once

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"

namespace inflap {

enum class Op { num, t, x, radius, coef, neg, add, mul, exp, pow, cospow, clip };

// Prefix expression over x and t. `pow e g` is the signed power e|e|^{g-1};
// `cospow e g` is (1 + cos e)^g; `clip C e` evaluates e with t clamped to [-C, C].
struct Expr {
  Op op = Op::num;
  double c = 0;
  int idx = 0;
  std::string name;
  std::vector<Expr> kids;
};

namespace detail {

struct Lexer {
  const std::string& s;
  std::size_t p = 0;

  void skip() {
    while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;
  }
  bool done() {
    skip();
    return p >= s.size();
  }
  std::string next() {
    skip();
    if (p >= s.size()) throw Error("parse", "unexpected end of expression");
    if (s[p] == '(' || s[p] == ')') return std::string(1, s[p++]);
    std::size_t a = p;
    while (p < s.size() && !std::isspace(static_cast<unsigned char>(s[p])) && s[p] != '(' &&
           s[p] != ')')
      ++p;
    return s.substr(a, p - a);
  }
};

inline bool parse_number(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

inline Expr parse_expr(Lexer& lx) {
  std::string tok = lx.next();
  Expr e;
  double num;
  if (tok == ")") throw Error("parse", "unexpected ')' at offset " + std::to_string(lx.p));
  if (tok != "(") {
    if (tok == "t") {
      e.op = Op::t;
    } else if (tok == "r") {
      e.op = Op::radius;
    } else if (tok.size() >= 2 && tok[0] == 'x' &&
               std::all_of(tok.begin() + 1, tok.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      e.op = Op::x;
      e.idx = std::stoi(tok.substr(1));
    } else if (parse_number(tok, num)) {
      e.op = Op::num;
      e.c = num;
    } else {
      throw Error("parse", "unknown atom '" + tok + "'");
    }
    return e;
  }
  std::string head = lx.next();
  auto close = [&] {
    if (lx.next() != ")") throw Error("parse", "expected ')' after (" + head + " ...");
  };
  auto number_arg = [&]() {
    std::string t = lx.next();
    double v;
    if (!parse_number(t, v)) throw Error("parse", head + " expects a numeric parameter, got '" + t + "'");
    return v;
  };
  if (head == "coef") {
    e.op = Op::coef;
    e.name = lx.next();
    if (e.name == "(" || e.name == ")") throw Error("parse", "coef expects a name");
    close();
  } else if (head == "neg" || head == "exp") {
    e.op = head == "neg" ? Op::neg : Op::exp;
    e.kids.push_back(parse_expr(lx));
    close();
  } else if (head == "add" || head == "mul") {
    e.op = head == "add" ? Op::add : Op::mul;
    lx.skip();
    while (lx.p < lx.s.size() && lx.s[lx.p] != ')') {
      e.kids.push_back(parse_expr(lx));
      lx.skip();
    }
    if (e.kids.empty()) throw Error("parse", head + " needs at least one operand");
    close();
  } else if (head == "pow" || head == "cospow") {
    e.op = head == "pow" ? Op::pow : Op::cospow;
    e.kids.push_back(parse_expr(lx));
    e.c = number_arg();
    if (!(e.c > 0)) throw Error("parse", head + " exponent must be positive");
    close();
  } else if (head == "clip") {
    e.op = Op::clip;
    e.c = number_arg();
    if (!(e.c > 0)) throw Error("parse", "clip bound must be positive");
    e.kids.push_back(parse_expr(lx));
    close();
  } else {
    throw Error("parse", "unknown operator '" + head + "'");
  }
  return e;
}

}  // namespace detail

inline Expr parse_expression(const std::string& text) {
  detail::Lexer lx{text};
  Expr e = detail::parse_expr(lx);
  if (!lx.done()) throw Error("parse", "trailing input at offset " + std::to_string(lx.p));
  return e;
}

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  os.precision(17);
  switch (e.op) {
    case Op::num: os << e.c; break;
    case Op::t: os << "t"; break;
    case Op::x: os << "x" << e.idx; break;
    case Op::radius: os << "r"; break;
    case Op::coef: os << "(coef " << e.name << ")"; break;
    case Op::neg: os << "(neg " << to_string(e.kids[0]) << ")"; break;
    case Op::exp: os << "(exp " << to_string(e.kids[0]) << ")"; break;
    case Op::add:
    case Op::mul:
      os << (e.op == Op::add ? "(add" : "(mul");
      for (const auto& k : e.kids) os << ' ' << to_string(k);
      os << ')';
      break;
    case Op::pow: os << "(pow " << to_string(e.kids[0]) << ' ' << e.c << ")"; break;
    case Op::cospow: os << "(cospow " << to_string(e.kids[0]) << ' ' << e.c << ")"; break;
    case Op::clip: os << "(clip " << e.c << ' ' << to_string(e.kids[0]) << ")"; break;
  }
  return os.str();
}

inline int count_op(const Expr& e, Op op) {
  int n = e.op == op;
  for (const auto& k : e.kids) n += count_op(k, op);
  return n;
}
inline bool uses_t(const Expr& e) { return count_op(e, Op::t) > 0; }
inline int x_leaves(const Expr& e) {
  return count_op(e, Op::x) + count_op(e, Op::radius) + count_op(e, Op::coef);
}

enum class Sign { nonneg, nonpos, mixed };
enum class Monotone { nondecreasing, nonincreasing, none };

inline const char* name(Sign s) {
  return s == Sign::nonneg ? "nonneg" : s == Sign::nonpos ? "nonpos" : "mixed";
}
inline const char* name(Monotone m) {
  return m == Monotone::nondecreasing ? "nondecreasing"
         : m == Monotone::nonincreasing ? "nonincreasing"
                                        : "none";
}

// A coordinate function: closed form over x0.., r, or one sample per lattice node.
struct Coef {
  std::optional<Expr> closed;
  std::vector<double> samples;
};

// f(x, t) >= lo and <= hi for t in [t_lo, t_hi], all x.
struct DeclaredBound {
  double t_lo, t_hi, lo, hi;
};

struct RhsSpec {
  Expr expr;
  std::map<std::string, Coef> coefs;
  std::optional<Sign> sign;
  std::optional<Monotone> monotone;
  std::vector<DeclaredBound> bounds;
};

inline constexpr double saturation_level = 1e300;

namespace detail {

struct EvalCtx {
  const RhsSpec* f;
  const double* x;
  int n;
  long node;
  bool saturated = false;
};

inline double clampv(double v, EvalCtx& c) {
  if (std::isnan(v)) {
    c.saturated = true;
    return saturation_level;
  }
  if (v > saturation_level) {
    c.saturated = true;
    return saturation_level;
  }
  if (v < -saturation_level) {
    c.saturated = true;
    return -saturation_level;
  }
  return v;
}

inline double signed_pow(double v, double g) { return v == 0 ? 0.0 : std::copysign(std::pow(std::fabs(v), g), v); }

// Returns value and d/dt.
inline std::pair<double, double> eval(const Expr& e, double t, EvalCtx& c) {
  switch (e.op) {
    case Op::num: return {e.c, 0.0};
    case Op::t: return {t, 1.0};
    case Op::x:
      if (e.idx >= c.n) throw Error("parse", "coordinate x" + std::to_string(e.idx) + " exceeds dimension");
      return {c.x[e.idx], 0.0};
    case Op::radius: {
      double s = 0;
      for (int k = 0; k < c.n; ++k) s += c.x[k] * c.x[k];
      return {std::sqrt(s), 0.0};
    }
    case Op::coef: {
      auto it = c.f->coefs.find(e.name);
      if (it == c.f->coefs.end()) throw Error("parse", "undefined coefficient '" + e.name + "'");
      const Coef& cf = it->second;
      if (cf.closed) return {clampv(eval(*cf.closed, 0.0, c).first, c), 0.0};
      if (c.node < 0 || static_cast<std::size_t>(c.node) >= cf.samples.size())
        throw Error("parameter", "sampled coefficient '" + e.name + "' needs a grid node");
      return {cf.samples[c.node], 0.0};
    }
    case Op::neg: {
      auto [v, d] = eval(e.kids[0], t, c);
      return {-v, -d};
    }
    case Op::add: {
      double v = 0, d = 0;
      for (const auto& k : e.kids) {
        auto [kv, kd] = eval(k, t, c);
        v = clampv(v + kv, c);
        d += kd;
      }
      return {v, d};
    }
    case Op::mul: {
      double v = 1, d = 0;
      for (const auto& k : e.kids) {
        auto [kv, kd] = eval(k, t, c);
        d = d * kv + v * kd;
        v = clampv(v * kv, c);
      }
      return {v, std::isfinite(d) ? d : 0.0};
    }
    case Op::exp: {
      auto [v, d] = eval(e.kids[0], t, c);
      double ev = clampv(std::exp(v), c);
      return {ev, ev * d};
    }
    case Op::pow: {
      auto [v, d] = eval(e.kids[0], t, c);
      double g = e.c;
      double pv = clampv(signed_pow(v, g), c);
      double dv = v == 0 ? (g == 1 ? d : 0.0) : g * std::pow(std::fabs(v), g - 1) * d;
      return {pv, std::isfinite(dv) ? dv : 0.0};
    }
    case Op::cospow: {
      auto [v, d] = eval(e.kids[0], t, c);
      double base = 1 + std::cos(v);
      double pv = clampv(std::pow(base, e.c), c);
      double dv = base <= 0 ? 0.0 : e.c * std::pow(base, e.c - 1) * (-std::sin(v)) * d;
      return {pv, dv};
    }
    case Op::clip: {
      double tc = std::clamp(t, -e.c, e.c);
      auto [v, d] = eval(e.kids[0], tc, c);
      return {v, (t > -e.c && t < e.c) ? d : 0.0};
    }
  }
  return {0.0, 0.0};
}

}  // namespace detail

inline RhsSpec make_rhs(const std::string& text) {
  RhsSpec f;
  f.expr = parse_expression(text);
  return f;
}

inline void set_coef(RhsSpec& f, const std::string& name, const std::string& closed_form) {
  Expr e = parse_expression(closed_form);
  if (uses_t(e) || count_op(e, Op::coef)) throw Error("parse", "coefficient '" + name + "' may only use x and r");
  f.coefs[name] = Coef{e, {}};
}

inline void set_coef_samples(RhsSpec& f, const std::string& name, std::vector<double> samples) {
  f.coefs[name] = Coef{std::nullopt, std::move(samples)};
}

// f(x, t); `saturated` is raised when any intermediate hit +-1e300.
inline double eval_rhs(const RhsSpec& f, const double* x, int n, double t, bool* saturated = nullptr,
                       long node = -1) {
  detail::EvalCtx c{&f, x, n, node};
  double v = detail::eval(f.expr, t, c).first;
  if (saturated) *saturated = *saturated || c.saturated;
  return v;
}

inline double eval_rhs(const RhsSpec& f, const GridDomain& d, std::size_t node, double t,
                       bool* saturated = nullptr) {
  double x[8];
  d.point(node, x);
  return eval_rhs(f, x, d.dim(), t, saturated, static_cast<long>(node));
}

// Value and partial derivative in t.
inline std::pair<double, double> eval_rhs_dt(const RhsSpec& f, const GridDomain& d, std::size_t node,
                                             double t, bool* saturated = nullptr) {
  double x[8];
  d.point(node, x);
  detail::EvalCtx c{&f, x, d.dim(), static_cast<long>(node)};
  auto r = detail::eval(f.expr, t, c);
  if (saturated) *saturated = *saturated || c.saturated;
  return r;
}

struct Range {
  double lo = inf, hi = -inf;
  bool estimate = false;
  bool saturated = false;
};

namespace detail {

struct Interval {
  double lo, hi;
};

inline Interval imul(Interval a, Interval b) {
  double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  for (double& v : c)
    if (std::isnan(v)) v = 0;  // 0 * inf from a degenerate factor
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

inline double clamp_sat(double v, bool& sat) {
  if (v > saturation_level) {
    sat = true;
    return saturation_level;
  }
  if (v < -saturation_level) {
    sat = true;
    return -saturation_level;
  }
  return v;
}

// Exact range of (1 + cos s)^g for s in [a, b].
inline Interval cospow_range(double a, double b, double g) {
  const double pi = 3.14159265358979323846;
  double cmax = std::max(std::cos(a), std::cos(b)), cmin = std::min(std::cos(a), std::cos(b));
  if (std::floor(b / (2 * pi)) * 2 * pi >= a) cmax = 1;
  if (std::floor((b - pi) / (2 * pi)) * 2 * pi + pi >= a) cmin = -1;
  return {std::pow(1 + cmin, g), std::pow(1 + cmax, g)};
}

// Interval evaluation; exact when every variable leaf occurs once.
inline Interval irange(const Expr& e, Interval t, const std::map<const Expr*, Interval>& xr,
                       bool& sat) {
  switch (e.op) {
    case Op::num: return {e.c, e.c};
    case Op::t: return t;
    case Op::x:
    case Op::radius:
    case Op::coef: return xr.at(&e);
    case Op::neg: {
      auto a = irange(e.kids[0], t, xr, sat);
      return {-a.hi, -a.lo};
    }
    case Op::add: {
      Interval s{0, 0};
      for (const auto& k : e.kids) {
        auto a = irange(k, t, xr, sat);
        s = {clamp_sat(s.lo + a.lo, sat), clamp_sat(s.hi + a.hi, sat)};
      }
      return s;
    }
    case Op::mul: {
      Interval s{1, 1};
      for (const auto& k : e.kids) {
        s = imul(s, irange(k, t, xr, sat));
        s = {clamp_sat(s.lo, sat), clamp_sat(s.hi, sat)};
      }
      return s;
    }
    case Op::exp: {
      auto a = irange(e.kids[0], t, xr, sat);
      return {clamp_sat(std::exp(a.lo), sat), clamp_sat(std::exp(a.hi), sat)};
    }
    case Op::pow: {
      auto a = irange(e.kids[0], t, xr, sat);
      return {clamp_sat(signed_pow(a.lo, e.c), sat), clamp_sat(signed_pow(a.hi, e.c), sat)};
    }
    case Op::cospow: {
      auto a = irange(e.kids[0], t, xr, sat);
      return cospow_range(a.lo, a.hi, e.c);
    }
    case Op::clip: {
      Interval tc{std::clamp(t.lo, -e.c, e.c), std::clamp(t.hi, -e.c, e.c)};
      return irange(e.kids[0], tc, xr, sat);
    }
  }
  return {0, 0};
}

inline void collect_x_leaves(const Expr& e, std::vector<const Expr*>& out) {
  if (e.op == Op::x || e.op == Op::radius || e.op == Op::coef) out.push_back(&e);
  for (const auto& k : e.kids) collect_x_leaves(k, out);
}

// Range of a t-free subexpression over the interior nodes.
inline Interval x_range(const RhsSpec& f, const Expr& e, const GridDomain& d, bool& sat) {
  Interval r{inf, -inf};
  double x[8];
  for (std::size_t i : d.interior()) {
    d.point(i, x);
    EvalCtx c{&f, x, d.dim(), static_cast<long>(i)};
    double v = eval(e, 0.0, c).first;
    sat = sat || c.saturated;
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  return r;
}

inline Interval sampled_t_range(const RhsSpec& f, const Expr& e, const GridDomain& d, Interval I,
                                bool& sat, bool x_dependent) {
  const int n = 2049;
  Interval r{inf, -inf};
  double x[8];
  std::vector<std::size_t> nodes;
  if (x_dependent) nodes = d.interior();
  else nodes.push_back(d.interior().front());
  for (std::size_t i : nodes) {
    d.point(i, x);
    for (int k = 0; k < n; ++k) {
      double t = I.lo + (I.hi - I.lo) * k / (n - 1.0);
      EvalCtx c{&f, x, d.dim(), static_cast<long>(i)};
      double v = eval(e, t, c).first;
      sat = sat || c.saturated;
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  }
  return r;
}

}  // namespace detail

// Range of f over (interior nodes) x I. Exact for expressions with at most one t leaf and
// at most one x leaf, and for sums/products whose factors split into x-only and t-only parts
// with each part exact; sampled otherwise (tagged estimate).
inline Range rhs_range(const RhsSpec& f, const GridDomain& d, double t_lo, double t_hi) {
  if (t_lo > t_hi) std::swap(t_lo, t_hi);
  Range out;
  bool sat = false;
  detail::Interval I{t_lo, t_hi};
  std::function<detail::Interval(const Expr&, bool&)> part = [&](const Expr& e, bool& exact) -> detail::Interval {
    bool has_t = uses_t(e);
    int xl = x_leaves(e);
    if (!has_t) return detail::x_range(f, e, d, sat);
    if (xl == 0) {
      if (count_op(e, Op::t) <= 1) return detail::irange(e, I, {}, sat);
      exact = false;
      return detail::sampled_t_range(f, e, d, I, sat, false);
    }
    if (count_op(e, Op::t) <= 1 && xl <= 1) {
      std::vector<const Expr*> leaves;
      detail::collect_x_leaves(e, leaves);
      std::map<const Expr*, detail::Interval> xr;
      for (const Expr* l : leaves) xr[l] = detail::x_range(f, *l, d, sat);
      return detail::irange(e, I, xr, sat);
    }
    if (e.op == Op::mul || e.op == Op::add) {
      // Split into factors that are t-only, x-only or mixed; independent only if at most
      // one group depends on x and none mixes.
      int mixed = 0, xonly = 0;
      for (const auto& k : e.kids) {
        bool kt = uses_t(k);
        int kx = x_leaves(k);
        if (kt && kx) ++mixed;
        else if (kx) ++xonly;
      }
      if (mixed == 0 && xonly >= 1) {
        Expr xs{e.op, 0, 0, "", {}}, ts{e.op, 0, 0, "", {}};
        for (const auto& k : e.kids) (uses_t(k) ? ts : xs).kids.push_back(k);
        if (ts.kids.empty()) ts = Expr{Op::num, e.op == Op::mul ? 1.0 : 0.0};
        detail::Interval a = detail::x_range(f, xs, d, sat);
        detail::Interval b = part(ts, exact);
        if (e.op == Op::mul) return detail::imul(a, b);
        return {a.lo + b.lo, a.hi + b.hi};
      }
    }
    exact = false;
    return detail::sampled_t_range(f, e, d, I, sat, true);
  };
  bool exact = true;
  auto r = part(f.expr, exact);
  out.lo = r.lo;
  out.hi = r.hi;
  out.estimate = !exact;
  out.saturated = sat;
  return out;
}

struct ProbeSchedule {
  int decade_lo = -2, decade_hi = 3;  // |t| in [10^lo, 10^hi]
  int per_decade = 64;
  double center = 0;                  // probes are center +- |t|
};

inline std::vector<double> probe_ts(const ProbeSchedule& p) {
  std::vector<double> ts;
  int n = (p.decade_hi - p.decade_lo) * p.per_decade;
  for (int k = n; k >= 0; --k) ts.push_back(p.center - std::pow(10.0, p.decade_lo + double(k) / p.per_decade));
  ts.push_back(p.center);
  for (int k = 0; k <= n; ++k) ts.push_back(p.center + std::pow(10.0, p.decade_lo + double(k) / p.per_decade));
  return ts;
}

// Sign and monotonicity observed on the probe lattice (all non-exterior nodes).
struct Observed {
  bool nonneg = true, nonpos = true, up = true, down = true;
  bool saturated = false;

  Sign sign() const { return nonneg ? Sign::nonneg : nonpos ? Sign::nonpos : Sign::mixed; }
  Monotone monotone() const {
    return up ? Monotone::nondecreasing : down ? Monotone::nonincreasing : Monotone::none;
  }
};

inline Observed observe(const RhsSpec& f, const GridDomain& d, const ProbeSchedule& p = {}) {
  auto ts = probe_ts(p);
  Observed o;
  bool x_dep = x_leaves(f.expr) > 0;
  double x[8];
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.tag(i) == Tag::exterior) continue;
    d.point(i, x);
    double prev = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      double v = eval_rhs(f, x, d.dim(), ts[k], &o.saturated, static_cast<long>(i));
      if (v < 0) o.nonneg = false;
      if (v > 0) o.nonpos = false;
      if (k) {
        double slack = 1e-12 * std::max(std::fabs(v), std::fabs(prev));
        if (v < prev - slack) o.up = false;
        if (v > prev + slack) o.down = false;
      }
      prev = v;
    }
    if (!x_dep) break;
  }
  return o;
}

// Throws when a declared attribute is contradicted on the probe lattice.
inline void validate_attributes(const RhsSpec& f, const GridDomain& d, const ProbeSchedule& p = {}) {
  if (!f.sign && !f.monotone && f.bounds.empty()) return;
  Observed o = observe(f, d, p);
  if ((f.sign == Sign::nonneg && !o.nonneg) || (f.sign == Sign::nonpos && !o.nonpos))
    throw Error("attribute", std::string("declared sign ") + name(*f.sign) + " violated");
  if ((f.monotone == Monotone::nondecreasing && !o.up) ||
      (f.monotone == Monotone::nonincreasing && !o.down))
    throw Error("attribute", std::string("declared monotonicity ") + name(*f.monotone) + " violated");
  for (const auto& b : f.bounds) {
    Range r = rhs_range(f, d, b.t_lo, b.t_hi);
    double slack = 1e-12 * std::max(1.0, std::max(std::fabs(r.lo), std::fabs(r.hi)));
    if (r.lo < b.lo - slack || r.hi > b.hi + slack)
      throw Error("attribute", "declared bound violated on [" + std::to_string(b.t_lo) + ", " +
                                   std::to_string(b.t_hi) + "]");
  }
}

// Monotonicity the solver may rely on: declared if given, else observed.
inline Monotone effective_monotone(const RhsSpec& f, const GridDomain& d) {
  if (!uses_t(f.expr)) return Monotone::nondecreasing;
  if (f.monotone) return *f.monotone;
  ProbeSchedule p;
  p.per_decade = 8;
  return observe(f, d, p).monotone();
}

}  // namespace inflap
