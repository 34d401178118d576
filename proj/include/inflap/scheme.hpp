#pragma once

#include <numeric>

#include "core.hpp"
#include "rhs.hpp"

namespace inflap {

struct SchemeParams {
  int width = 2;
  double delta_reg = 1e-10;
};

// Per interior node, the surviving directions (both e and -e non-exterior) in
// lexicographic order of their integer offsets. partner[k] indexes -e within the node's list.
struct Stencil {
  DomainPtr dom;
  int width = 0;
  std::vector<std::vector<int>> offsets;   // all candidate directions, lexicographic
  std::vector<std::size_t> start;          // per lattice node; interior nodes only populated
  std::vector<std::size_t> nbr;            // neighbour node index
  std::vector<double> len;                 // step length |h_e|
  std::vector<std::uint32_t> partner;      // local index of the opposite direction
  std::vector<std::uint32_t> dir;          // index into offsets

  std::size_t begin(std::size_t node) const { return start[node]; }
  std::size_t end(std::size_t node) const { return start[node + 1]; }
};

// Coprime offsets with max |e_k| <= w; width 1 is the axis (von Neumann) set.
inline std::vector<std::vector<int>> stencil_offsets(int n, int w) {
  std::vector<std::vector<int>> out;
  std::vector<int> off(n, -w);
  while (true) {
    int g = 0, l1 = 0;
    for (int v : off) {
      g = std::gcd(g, std::abs(v));
      l1 += std::abs(v);
    }
    if (g == 1 && (w > 1 || l1 == 1)) out.push_back(off);
    int k = n - 1;
    while (k >= 0 && off[k] == w) off[k--] = -w;
    if (k < 0) break;
    ++off[k];
  }
  return out;  // enumeration order is already lexicographic
}

inline Stencil build_stencil(DomainPtr d, int w) {
  if (w < 1) throw Error("parameter", "stencil width must be >= 1");
  Stencil s;
  s.dom = d;
  s.width = w;
  s.offsets = stencil_offsets(d->dim(), w);
  const int n = d->dim();
  std::vector<int> opp_index(s.offsets.size());
  for (std::size_t a = 0; a < s.offsets.size(); ++a) {
    std::vector<int> neg(n);
    for (int k = 0; k < n; ++k) neg[k] = -s.offsets[a][k];
    opp_index[a] = static_cast<int>(std::find(s.offsets.begin(), s.offsets.end(), neg) - s.offsets.begin());
  }
  std::vector<double> lens(s.offsets.size());
  for (std::size_t a = 0; a < s.offsets.size(); ++a) {
    double q = 0;
    for (int v : s.offsets[a]) q += double(v) * v;
    lens[a] = d->spacing() * std::sqrt(q);
  }
  s.start.assign(d->size() + 1, 0);
  std::vector<long> hit(s.offsets.size());
  for (std::size_t i = 0; i < d->size(); ++i) {
    s.start[i] = s.nbr.size();
    if (d->tag(i) != Tag::interior) continue;
    for (std::size_t a = 0; a < s.offsets.size(); ++a) {
      long j = d->neighbor(i, s.offsets[a].data());
      hit[a] = (j >= 0 && d->tag(j) != Tag::exterior) ? j : -1;
    }
    std::vector<int> local(s.offsets.size(), -1);
    int pairs = 0;
    for (std::size_t a = 0; a < s.offsets.size(); ++a) {
      if (hit[a] < 0 || hit[opp_index[a]] < 0) continue;
      local[a] = static_cast<int>(s.nbr.size() - s.start[i]);
      s.nbr.push_back(static_cast<std::size_t>(hit[a]));
      s.len.push_back(lens[a]);
      s.dir.push_back(static_cast<std::uint32_t>(a));
      ++pairs;
    }
    for (std::size_t a = 0; a < s.offsets.size(); ++a)
      if (local[a] >= 0) s.partner.push_back(static_cast<std::uint32_t>(local[opp_index[a]]));
    if (pairs / 2 < n)
      throw Error("degenerate-stencil", "node " + std::to_string(i) + " keeps " +
                                            std::to_string(pairs / 2) + " direction pairs");
  }
  s.start[d->size()] = s.nbr.size();
  return s;
}

// Steepest ascent/descent directions at a node with u(x) replaced by t.
struct LocalGeometry {
  std::size_t up = 0, down = 0;  // absolute indices into Stencil arrays
  double d_up = 0, d_down = 0;   // difference quotients
};

inline LocalGeometry steepest(const Stencil& s, const double* u, std::size_t node, double t) {
  LocalGeometry g;
  std::size_t b = s.begin(node), e = s.end(node);
  g.up = g.down = b;
  g.d_up = g.d_down = (u[s.nbr[b]] - t) / s.len[b];
  for (std::size_t k = b + 1; k < e; ++k) {
    double q = (u[s.nbr[k]] - t) / s.len[k];
    if (q > g.d_up) {
      g.d_up = q;
      g.up = k;
    }
    if (q < g.d_down) {
      g.d_down = q;
      g.down = k;
    }
  }
  return g;
}

// Pair weights are ((c_e + m) / (c_max + m))^64. Sharper weights track the gradient direction
// more closely; with hard selection (the limit) Gauss-Seidel cycles on 2D balls.
inline constexpr int pair_weight_squarings = 6;
inline constexpr double pair_weight_floor = 8.0;

// Normalised pair weights at a node, c_e the centred slope along the pair, written to
// w[k - begin]. The floor m is 8 times the spread of the pair means over the spacing; it is
// O(h |D^2 u|) on smooth data and keeps the weights continuous near critical points.
inline void pair_weights(const Stencil& s, const double* u, std::size_t node, double* w) {
  std::size_t b = s.begin(node), e = s.end(node);
  double cmax = 0, amin = inf, amax = -inf;
  for (std::size_t k = b; k < e; ++k) {
    double up = u[s.nbr[k]], dn = u[s.nbr[b + s.partner[k]]];
    w[k - b] = std::fabs(up - dn) / s.len[k];
    cmax = std::max(cmax, w[k - b]);
    amin = std::min(amin, 0.5 * (up + dn));
    amax = std::max(amax, 0.5 * (up + dn));
  }
  double floor = pair_weight_floor * (amax - amin) / s.dom->spacing();
  double ws = 0;
  for (std::size_t k = b; k < e; ++k) {
    double v = cmax + floor > 0 ? (w[k - b] + floor) / (cmax + floor) : 1.0;
    for (int j = 0; j < pair_weight_squarings; ++j) v *= v;
    w[k - b] = v;
    ws += v;
  }
  for (std::size_t k = b; k < e; ++k) w[k - b] /= ws;
}

// Weighted second difference written as S(t) = a - b t.
struct SecondDifference {
  double a = 0, b = 0;
};

inline SecondDifference second_difference(const Stencil& s, const double* u, std::size_t node) {
  std::size_t b = s.begin(node), e = s.end(node);
  thread_local std::vector<double> w;
  w.resize(e - b);
  pair_weights(s, u, node, w.data());
  SecondDifference out;
  for (std::size_t k = b; k < e; ++k) {
    double q = w[k - b] / (s.len[k] * s.len[k]);
    out.a += q * (u[s.nbr[k]] + u[s.nbr[b + s.partner[k]]]);
    out.b += 2 * q;
  }
  return out;
}

// Slope estimate (|D_max| + |D_min|)/2 times the weighted second difference. The weights do
// not depend on u(x), so S is affine and decreasing in t. Returns S * p^2.
inline double operator_value(const Stencil& s, const double* u, std::size_t node, double t,
                             double* slope = nullptr, double* second = nullptr) {
  LocalGeometry g = steepest(s, u, node, t);
  double p = 0.5 * (std::fabs(g.d_up) + std::fabs(g.d_down));
  auto sd = second_difference(s, u, node);
  double S = sd.a - sd.b * t;
  if (slope) *slope = p;
  if (second) *second = S;
  return S * p * p;
}

inline double apply_inf_lap(const ScalarField& u, std::size_t node, const Stencil& s,
                            const SchemeParams& = {}) {
  return operator_value(s, u.v.data(), node, u[node]);
}

struct Residual {
  ScalarField field;
  double sup = 0;
  bool saturated = false;
};

inline Residual residual_field(const ScalarField& u, const RhsSpec& f, const Stencil& s,
                               const SchemeParams& p = {}) {
  Residual r{ScalarField(u.dom, 0.0)};
  for (std::size_t i : u.dom->interior()) {
    double v = apply_inf_lap(u, i, s, p) - eval_rhs(f, *u.dom, i, u[i], &r.saturated);
    r.field[i] = v;
    r.sup = std::max(r.sup, std::fabs(v));
  }
  return r;
}

}  // namespace inflap
