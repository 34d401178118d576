#pragma once

// pchip calls isnan unqualified; the C header puts it in the global namespace
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>

#include "core.hpp"
#include "rhs.hpp"

namespace inflap {

// Nondecreasing h on [ell, inf) with h > 0 to the right of ell.
struct MonotoneRhs1D {
  std::function<double(double)> h;
  double ell = 0;
  bool positive = true;
};

namespace detail {

inline double gk(const std::function<double(double)>& g, double a, double b, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  if (a == b) return 0.0;
  // Boost's error estimate has a floor near eps / (b - a), so short intervals never
  // converge; integrate over [0, 1] and rescale.
  double len = b - a;
  auto unit = [&](double u) { return g(a + len * u); };
  return len * gauss_kronrod<double, 61>::integrate(unit, 0.0, 1.0, 15, tol);
}

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v) || std::fabs(v) >= saturation_level)
    throw Error("saturation", std::string(what) + " overflowed");
}

// Probe points ell + span * 2^-j, j = 0..40, and a geometric run to the right.
inline void probe_monotone(const MonotoneRhs1D& m, double span, bool& nonneg, bool& up, bool& positive) {
  std::vector<double> ts;
  for (int j = 40; j >= 0; --j) ts.push_back(m.ell + span * std::ldexp(1.0, -j));
  for (int j = 1; j <= 24; ++j) ts.push_back(m.ell + span * std::ldexp(1.0, j));
  nonneg = m.h(m.ell) >= 0;
  up = true;
  positive = true;
  double prev = m.h(m.ell);
  for (double t : ts) {
    double v = m.h(t);
    if (!std::isfinite(v)) break;
    if (v < 0) nonneg = false;
    if (v <= 0) positive = false;
    if (v < prev - 1e-12 * std::max(std::fabs(v), std::fabs(prev))) up = false;
    prev = v;
  }
}

}  // namespace detail

// h given as a t-only expression; probing validates h >= 0 and monotonicity and sets the
// positivity flag.
inline MonotoneRhs1D make_monotone_rhs(const std::string& text, double ell) {
  RhsSpec f = make_rhs(text);
  if (x_leaves(f.expr) || count_op(f.expr, Op::coef)) throw Error("parse", "h may only depend on t");
  MonotoneRhs1D m;
  m.h = [f](double t) { return eval_rhs(f, nullptr, 0, t); };
  m.ell = ell;
  bool nonneg, up;
  detail::probe_monotone(m, 1.0, nonneg, up, m.positive);
  if (!nonneg) throw Error("attribute", "h is negative on [ell, inf)");
  if (!up) throw Error("attribute", "h is not nondecreasing");
  return m;
}

inline MonotoneRhs1D make_monotone_rhs(std::function<double(double)> h, double ell) {
  MonotoneRhs1D m{std::move(h), ell, true};
  bool nonneg, up;
  detail::probe_monotone(m, 1.0, nonneg, up, m.positive);
  if (!nonneg) throw Error("attribute", "h is negative on [ell, inf)");
  if (!up) throw Error("attribute", "h is not nondecreasing");
  return m;
}

// Average of h over [ell, t]: continuous, nondecreasing and below h.
inline MonotoneRhs1D monotone_smooth(const MonotoneRhs1D& m) {
  MonotoneRhs1D out = m;
  auto h = m.h;
  double ell = m.ell;
  out.h = [h, ell](double t) {
    if (t <= ell) return h(ell);
    return detail::gk(h, ell, t, 1e-12) / (t - ell);
  };
  return out;
}

// True when h jumps somewhere on the probe lattice over [ell, ell + span]: the increment
// across a shrinking gap does not shrink.
inline bool looks_discontinuous(const MonotoneRhs1D& m, double span = 10.0, int n = 400) {
  for (int i = 1; i < n; ++i) {
    double t = m.ell + span * i / n;
    double d1 = m.h(t + 1e-6 * span) - m.h(t - 1e-6 * span);
    double d2 = m.h(t + 1e-9 * span) - m.h(t - 1e-9 * span);
    if (d2 > 0.5 * d1 && d1 > 1e-9 * (1 + std::fabs(m.h(t)))) return true;
  }
  return false;
}

inline double cumulative_H(const MonotoneRhs1D& m, double t) {
  if (t < m.ell) throw Error("parameter", "cumulative_H needs t >= ell");
  double v = detail::gk(m.h, m.ell, t, 1e-10);
  detail::check_finite(v, "H");
  return v;
}

namespace detail {

// H(a) - H(s) integrated directly, so no cancellation near s = a.
// mean of h over [a - len, a]; taking len directly avoids cancellation in a - s
inline double h_mean(const MonotoneRhs1D& m, double len, double a) {
  return gk([&](double u) { return m.h(a - len * u); }, 0.0, 1.0, 1e-13);
}

inline double H_gap(const MonotoneRhs1D& m, double s, double a) { return (a - s) * h_mean(m, a - s, a); }

inline void require_positive(const MonotoneRhs1D& m, double a) {
  for (int j = 0; j <= 40; ++j) {
    double t = m.ell + (a - m.ell) * std::ldexp(1.0, -j);
    if (!(m.h(t) > 0))
      throw Error("singular-integral-divergent", "h vanishes at t = " + std::to_string(t) + " inside (ell, a)");
  }
}

// int_lo^a (H(a) - H(s))^(-1/4) ds with lo < a, substituting s = a - tau^4 on the part within
// `w` of a.
inline double psi_integral(const MonotoneRhs1D& m, double lo, double a, double w, double tol) {
  double split = std::max(lo, a - w);
  auto near = [&](double tau) {
    if (tau == 0) return 0.0;
    double len = tau * tau * tau * tau;
    return 4 * tau * tau * tau / std::pow(len * h_mean(m, len, a), 0.25);
  };
  double v = gk(near, 0.0, std::pow(a - split, 0.25), tol);
  if (split > lo) {
    auto far = [&](double s) { return 1.0 / std::pow(H_gap(m, s, a), 0.25); };
    v += gk(far, lo, split, tol);
  }
  return v;
}

}  // namespace detail

inline constexpr double inv_sqrt2 = 0.70710678118654752440;

inline void check_prefactor(double p) {
  if (p != 1.0 && std::fabs(p - inv_sqrt2) > 1e-15) throw Error("parameter", "prefactor must be 1 or 1/sqrt(2)");
}

// prefactor * int_ell^a (H(a) - H(t))^(-1/4) dt
inline double zeta(const MonotoneRhs1D& m, double a, double prefactor) {
  check_prefactor(prefactor);
  if (!(a > m.ell)) throw Error("parameter", "zeta needs a > ell");
  detail::require_positive(m, a);
  double w = 0.5 * std::min(1.0, a - m.ell);
  double v = prefactor * detail::psi_integral(m, m.ell, a, w, 1e-10);
  detail::check_finite(v, "zeta");
  return v;
}

struct Bounds {
  double lower = 0, upper = 0;
};

// Closed-form bracket of int_t^a (H(a) - H(s))^(-1/4) ds.
inline Bounds zeta_bounds(const MonotoneRhs1D& m, double a, double t) {
  if (t < m.ell || t > a) throw Error("parameter", "zeta_bounds needs ell <= t <= a");
  double ha = m.h(a);
  if (!(ha > 0)) throw Error("singular-integral-divergent", "h(a) = 0");
  if (t == a) return {0, 0};
  double Ha = cumulative_H(m, a);
  return {4.0 / 3 * std::pow(std::pow(a - t, 3) / ha, 0.25), 4.0 / 3 * std::pow(std::pow(a - t, 4) / Ha, 0.25)};
}

// phi on [0, R] with phi(0) = a, phi'(0) = 0, phi(R) = ell, solving
// (phi')^2 phi'' = -h(phi) / (4 prefactor^4).
struct RadialProfile {
  std::vector<double> r, phi, dphi;  // dphi = -(H(a) - H(phi))^(1/4) / prefactor
  double a = 0, ell = 0, R = 0, prefactor = 1;
  std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> interp;

  // ell beyond R, a at negative r
  double operator()(double rr) const {
    if (rr <= 0) return a;
    if (rr >= R) return ell;
    return (*interp)(rr);
  }
};

inline void finalize_profile(RadialProfile& p) {
  auto r = p.r, phi = p.phi;
  p.interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(r), std::move(phi));
}

inline RadialProfile build_profile(const MonotoneRhs1D& m, double a, double prefactor, int n = 2000) {
  check_prefactor(prefactor);
  if (!(a > m.ell)) throw Error("parameter", "build_profile needs a > ell");
  detail::require_positive(m, a);
  RadialProfile p;
  p.a = a;
  p.ell = m.ell;
  p.prefactor = prefactor;
  double span = a - m.ell;
  // t_i = a - span (i/n)^(4/3); psi grows like (a - t)^(3/4), so r is close to uniform
  std::vector<double> t(n + 1);
  for (int i = 0; i <= n; ++i) t[i] = a - span * std::pow(double(i) / n, 4.0 / 3.0);
  t[n] = m.ell;
  p.r.assign(n + 1, 0.0);
  p.phi = t;
  p.dphi.assign(n + 1, 0.0);
  double acc = detail::psi_integral(m, t[1], a, a - t[1], 1e-13);
  p.r[1] = prefactor * acc;
  for (int i = 2; i <= n; ++i) {
    auto g = [&](double s) { return 1.0 / std::pow(detail::H_gap(m, s, a), 0.25); };
    // segments after the first are smooth and short; fixed Gauss-Legendre suffices
    acc += boost::math::quadrature::gauss<double, 20>::integrate(g, t[i], t[i - 1]);
    p.r[i] = prefactor * acc;
  }
  for (int i = 1; i <= n; ++i) p.dphi[i] = -std::pow(detail::H_gap(m, t[i], a), 0.25) / prefactor;
  p.R = p.r[n];
  detail::check_finite(p.R, "profile radius");
  finalize_profile(p);
  return p;
}

// max over interior nodes of |(1/3) d/dr (phi')^3 + h(phi) / (4 prefactor^4)|, the derivative by
// centred differences on the stored nodes.
inline double profile_ode_residual(const RadialProfile& p, const MonotoneRhs1D& m) {
  double worst = 0, c = 1 / (4 * std::pow(p.prefactor, 4));
  for (std::size_t i = 1; i + 1 < p.r.size(); ++i) {
    double q1 = std::pow(p.dphi[i + 1], 3), q0 = std::pow(p.dphi[i - 1], 3);
    double lhs = (q1 - q0) / (3 * (p.r[i + 1] - p.r[i - 1]));
    worst = std::max(worst, std::fabs(lhs + c * m.h(p.phi[i])));
  }
  return worst;
}

// Samples phi(|x - z|); nodes beyond R get ell.
inline ScalarField profile_field(DomainPtr d, const RadialProfile& p, const Point& z) {
  return sample(d, [&](const Point& x) { return p(distance(x.data(), z.data(), d->dim())); });
}

enum class Orientation { sub, super };

// sub: C (sigma |x - z|^(4/3) + dshift), super: C (dshift - sigma |x - z|^(4/3))
inline ScalarField cone_field(DomainPtr d, double C, const Point& z, double dshift, Orientation o) {
  if (!(C >= 0)) throw Error("parameter", "cone amplitude must be >= 0");
  if (static_cast<int>(z.size()) != d->dim()) throw Error("parameter", "vertex dimension mismatch");
  double sgn = o == Orientation::sub ? 1.0 : -1.0;
  return sample(d, [&](const Point& x) {
    return C * (sgn * sigma * std::pow(distance(x.data(), z.data(), d->dim()), 4.0 / 3.0) + dshift);
  });
}

// {sigma (R^(4/3) - |x - c|^(4/3)) / beta}^beta, beta = 3 / (3 - gamma), zero outside the ball.
inline ScalarField power_subsolution(double gamma, double R, DomainPtr d, const Point& center = {}) {
  if (!(gamma > 0 && gamma < 3)) throw Error("parameter", "gamma must lie in (0, 3)");
  if (!(R > 0)) throw Error("parameter", "radius must be positive");
  Point c = center.empty() ? Point(d->dim(), 0.0) : center;
  double beta = 3 / (3 - gamma);
  return sample(d, [&](const Point& x) {
    double g = std::pow(R, 4.0 / 3.0) - std::pow(distance(x.data(), c.data(), d->dim()), 4.0 / 3.0);
    return g <= 0 ? 0.0 : std::pow(sigma * g / beta, beta);
  });
}

// int_0^1 (1 - t^(gamma+1))^(-1/4) dt, substituting t = 1 - tau^4.
inline double family_integral(double gamma) {
  auto g = [gamma](double tau) {
    if (tau == 0) return 0.0;
    double s = tau * tau * tau * tau;
    // 1 - t^(g+1) with t = 1 - s, kept accurate for small s
    double gap = -std::expm1((gamma + 1) * std::log1p(-s));
    return 4 * tau * tau * tau / std::pow(gap, 0.25);
  };
  return detail::gk(g, 0.0, 1.0, 1e-14);
}

// Amplitude a with int_0^a (a^(g+1) - s^(g+1))^(-1/4) ds = (4/(g+1))^(1/4) R. The left side is
// I / a^((g-3)/4), so a = (I ((g+1)/4)^(1/4) / R)^(4/(g-3)).
inline double family_amplitude(double gamma, double R = 1.0) {
  if (!(gamma > 0) || gamma == 3) throw Error("parameter", "gamma must be positive and != 3");
  if (!(R > 0)) throw Error("parameter", "radius must be positive");
  double I = family_integral(gamma);
  return std::pow(I * std::pow((gamma + 1) / 4, 0.25) / R, 4 / (gamma - 3));
}

// Profile of the family on [0, R]: h = s^gamma, ell = 0, prefactor 1/sqrt(2).
inline RadialProfile family_profile(double gamma, double R = 1.0, int n = 2000) {
  double a = family_amplitude(gamma, R);
  MonotoneRhs1D m;
  m.h = [gamma](double s) { return s <= 0 ? 0.0 : std::pow(s, gamma); };
  m.ell = 0;
  return build_profile(m, a, inv_sqrt2, n);
}

// Odd reflection about r = 1, even about r = 2, then 4-periodic (unit-radius profile).
inline double periodic_extension(const RadialProfile& p, double r) {
  double q = std::fmod(r, 4.0);
  if (q <= 1) return p(q);
  if (q <= 2) return -p(2 - q);
  if (q <= 3) return -p(q - 2);
  return p(4 - q);
}

struct FamilyMember {
  ScalarField u;
  RadialProfile profile;
  double scale = 1;  // (2k - 1)^(4/(gamma - 3))
};

// u_k(x) = (2k-1)^(4/(gamma-3)) w((2k-1) x) on a ball centred at the origin.
inline FamilyMember exact_family(double gamma, int k, DomainPtr d) {
  if (!(gamma > 3)) throw Error("parameter", "gamma must exceed 3");
  if (k < 1) throw Error("parameter", "k must be a positive integer");
  FamilyMember out;
  out.profile = family_profile(gamma);
  double m = 2.0 * k - 1;
  out.scale = std::pow(m, 4 / (gamma - 3));
  const auto& prof = out.profile;
  double s = out.scale;
  out.u = sample(d, [&](const Point& x) {
    double r = 0;
    for (double v : x) r += v * v;
    return s * periodic_extension(prof, m * std::sqrt(r));
  });
  return out;
}

inline void write_profile(std::ostream& out, const RadialProfile& p) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# RADIALPROFILE a=%.12e l=%.12e R=%.12e prefactor=%.12e\n", p.a, p.ell, p.R,
                p.prefactor);
  out << buf;
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.r[i], p.phi[i]);
    out << buf;
  }
}

// Reads back nodes and header; derivative data is not stored in the file.
inline RadialProfile read_profile(std::istream& in) {
  std::string line;
  RadialProfile p;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# RADIALPROFILE a=%lf l=%lf R=%lf prefactor=%lf", &p.a, &p.ell, &p.R, &p.prefactor) != 4)
    throw Error("parse", "missing RADIALPROFILE header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double r, v;
    if (std::sscanf(line.c_str(), "%lf,%lf", &r, &v) != 2) throw Error("parse", "bad profile row: " + line);
    p.r.push_back(r);
    p.phi.push_back(v);
  }
  if (p.r.size() < 2) throw Error("parse", "profile needs at least two rows");
  finalize_profile(p);
  return p;
}

}  // namespace inflap
