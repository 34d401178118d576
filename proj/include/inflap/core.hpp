#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace inflap {

// 3^{4/3}/4; sigma^3 = 81/64.
inline const double sigma = std::pow(3.0, 4.0 / 3.0) / 4.0;
inline constexpr double sigma_cubed = 81.0 / 64.0;
inline constexpr double inf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

using Point = std::vector<double>;

inline double distance(const double* a, const double* b, int n) {
  double s = 0;
  for (int k = 0; k < n; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

enum class Tag : std::uint8_t { interior, boundary, exterior };

struct Radii {
  double out_radius = 0;
  Point out_center;
  double in_radius = 0;
  Point in_center;
};

namespace detail {

// Felzenszwalb-Huttenlocher 1D squared distance transform, in place.
inline void edt_1d(std::vector<double>& f, std::size_t n, std::size_t stride,
                   std::size_t base, double h2, std::vector<double>& buf,
                   std::vector<int>& v, std::vector<double>& z) {
  buf.resize(n);
  v.resize(n);
  z.resize(n + 1);
  for (std::size_t q = 0; q < n; ++q) buf[q] = f[base + q * stride];
  int k = -1;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    if (!std::isfinite(buf[q])) continue;
    while (k >= 0) {
      int p = v[k];
      double s = ((buf[q] + h2 * q * q) - (buf[p] + h2 * p * p)) / (2.0 * h2 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -inf : ((buf[q] + h2 * q * q) - (buf[v[k - 1]] + h2 * v[k - 1] * v[k - 1])) /
                               (2.0 * h2 * (q - v[k - 1]));
    z[k + 1] = inf;
  }
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < static_cast<int>(n); ++q) {
    while (z[j + 1] < q) ++j;
    double d = q - v[j];
    f[base + q * stride] = h2 * d * d + buf[v[j]];
  }
}

}  // namespace detail

class GridDomain {
 public:
  // Analytic radii/diameter are used when the shape is known exactly (ball, box).
  GridDomain(double h, Point origin, std::vector<int> dims, std::vector<Tag> tags,
             std::optional<Radii> exact = {}, std::optional<double> exact_diameter = {})
      : h_(h), origin_(std::move(origin)), dims_(std::move(dims)), tags_(std::move(tags)) {
    n_ = static_cast<int>(dims_.size());
    if (n_ < 1 || origin_.size() != dims_.size() || !(h_ > 0))
      throw Error("malformed-mask", "inconsistent grid header");
    std::size_t total = 1;
    strides_.assign(n_, 1);
    for (int k = n_ - 1; k >= 0; --k) {
      if (dims_[k] < 1) throw Error("malformed-mask", "non-positive extent");
      strides_[k] = total;
      total *= static_cast<std::size_t>(dims_[k]);
    }
    if (tags_.size() != total) throw Error("malformed-mask", "mask size does not match dims");
    for (std::size_t i = 0; i < total; ++i) {
      if (tags_[i] == Tag::interior) interior_.push_back(i);
      if (tags_[i] == Tag::boundary) boundary_.push_back(i);
    }
    if (interior_.empty()) throw Error("empty-interior", "no interior nodes at this spacing");
    std::vector<int> off(n_, 0);
    for (std::size_t i : interior_) {
      for (int k = 0; k < n_; ++k) {
        for (int s : {-1, 1}) {
          off.assign(n_, 0);
          off[k] = s;
          long j = neighbor(i, off.data());
          if (j < 0 || tags_[j] == Tag::exterior)
            throw Error("malformed-mask", "interior node touches exterior");
        }
      }
    }
    compute_wall_distance();
    grid_radii_ = compute_grid_radii();
    radii_ = exact ? *exact : grid_radii_;
    diameter_ = exact_diameter ? *exact_diameter : compute_grid_diameter();
    if (radii_.in_radius > radii_.out_radius)
      throw Error("malformed-mask", "in-radius exceeds out-radius");
  }

  int dim() const { return n_; }
  double spacing() const { return h_; }
  const Point& origin() const { return origin_; }
  const std::vector<int>& dims() const { return dims_; }
  std::size_t size() const { return tags_.size(); }
  Tag tag(std::size_t i) const { return tags_[i]; }
  const std::vector<Tag>& tags() const { return tags_; }
  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& boundary() const { return boundary_; }
  const std::vector<std::size_t>& strides() const { return strides_; }

  int coord(std::size_t i, int k) const {
    return static_cast<int>((i / strides_[k]) % static_cast<std::size_t>(dims_[k]));
  }
  void point(std::size_t i, double* x) const {
    for (int k = 0; k < n_; ++k) x[k] = origin_[k] + h_ * coord(i, k);
  }
  Point point(std::size_t i) const {
    Point x(n_);
    point(i, x.data());
    return x;
  }
  // Index of node i shifted by an integer offset, or -1 outside the lattice.
  long neighbor(std::size_t i, const int* off) const {
    long j = static_cast<long>(i);
    for (int k = 0; k < n_; ++k) {
      int c = coord(i, k) + off[k];
      if (c < 0 || c >= dims_[k]) return -1;
      j += static_cast<long>(off[k]) * static_cast<long>(strides_[k]);
    }
    return j;
  }

  // Euclidean distance from node i to the nearest non-interior node (0 off the interior).
  double wall_distance(std::size_t i) const { return wall_[i]; }
  const Radii& radii() const { return radii_; }
  const Radii& grid_radii() const { return grid_radii_; }
  double diameter() const { return diameter_; }

  bool same_as(const GridDomain& o) const {
    return h_ == o.h_ && origin_ == o.origin_ && dims_ == o.dims_ && tags_ == o.tags_;
  }

  // Largest distance to the nearest non-member over nodes flagged in `member`.
  std::pair<double, std::size_t> subset_in_radius(const std::vector<char>& member) const {
    std::vector<double> d2(size());
    for (std::size_t i = 0; i < size(); ++i) d2[i] = member[i] ? inf : 0.0;
    squared_edt(d2);
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (member[i] && d2[i] > best) {
        best = d2[i];
        arg = i;
      }
    }
    return {best < 0 ? 0.0 : std::sqrt(best), arg};
  }

 private:
  void squared_edt(std::vector<double>& d2) const {
    std::vector<double> buf, z;
    std::vector<int> v;
    for (int k = 0; k < n_; ++k) {
      std::size_t n = dims_[k], stride = strides_[k];
      for (std::size_t base = 0; base < size(); ++base) {
        if (coord(base, k) != 0) continue;
        detail::edt_1d(d2, n, stride, base, h_ * h_, buf, v, z);
      }
    }
  }

  void compute_wall_distance() {
    std::vector<char> member(size());
    for (std::size_t i = 0; i < size(); ++i) member[i] = tags_[i] == Tag::interior;
    std::vector<double> d2(size());
    for (std::size_t i = 0; i < size(); ++i) d2[i] = member[i] ? inf : 0.0;
    squared_edt(d2);
    wall_.assign(size(), 0.0);
    for (std::size_t i : interior_) wall_[i] = std::sqrt(d2[i]);
  }

  Radii compute_grid_radii() const {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < size(); ++i)
      if (tags_[i] != Tag::exterior) nodes.push_back(i);
    Point lo(n_, inf), hi(n_, -inf), x(n_);
    for (std::size_t i : nodes) {
      point(i, x.data());
      for (int k = 0; k < n_; ++k) {
        lo[k] = std::min(lo[k], x[k]);
        hi[k] = std::max(hi[k], x[k]);
      }
    }
    auto farthest = [&](const Point& c) {
      double best = -1;
      std::size_t arg = nodes.front();
      for (std::size_t i : nodes) {
        point(i, x.data());
        double d = distance(x.data(), c.data(), n_);
        if (d > best) {
          best = d;
          arg = i;
        }
      }
      return std::make_pair(best, arg);
    };
    Point c(n_);
    for (int k = 0; k < n_; ++k) c[k] = 0.5 * (lo[k] + hi[k]);
    Radii r;
    r.out_center = c;
    r.out_radius = farthest(c).first;
    // Badoiu-Clarkson core-set iteration; keeps whichever centre encloses tighter.
    Point bc = c;
    for (int it = 1; it <= 200; ++it) {
      auto [d, j] = farthest(bc);
      Point p = point(j);
      for (int k = 0; k < n_; ++k) bc[k] += (p[k] - bc[k]) / (it + 1.0);
    }
    double dbc = farthest(bc).first;
    if (dbc < r.out_radius) {
      r.out_radius = dbc;
      r.out_center = bc;
    }
    double best = -1;
    std::size_t arg = interior_.front();
    for (std::size_t i : interior_) {
      if (wall_[i] > best) {
        best = wall_[i];
        arg = i;
      }
    }
    r.in_radius = best;
    r.in_center = point(arg);
    return r;
  }

  double compute_grid_diameter() const {
    std::vector<Point> pts;
    for (std::size_t i : boundary_) pts.push_back(point(i));
    double d = 0;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        d = std::max(d, distance(pts[a].data(), pts[b].data(), n_));
    return d;
  }

  double h_;
  Point origin_;
  std::vector<int> dims_;
  std::vector<Tag> tags_;
  int n_ = 0;
  std::vector<std::size_t> strides_;
  std::vector<std::size_t> interior_, boundary_;
  std::vector<double> wall_;
  Radii radii_, grid_radii_;
  double diameter_ = 0;
};

using DomainPtr = std::shared_ptr<const GridDomain>;

struct Ball {
  Point center;
  double radius;
};
struct Box {
  Point lo, hi;
};
struct MaskText {
  std::string text;
};
using Shape = std::variant<Ball, Box, MaskText>;

namespace detail {

// Tags from a signed distance sampled on the lattice: interior needs sd < 0 at the node
// and sd <= 0 at every Moore neighbour; boundary is any other node Moore-adjacent to interior.
inline std::vector<Tag> tag_lattice(const std::vector<double>& sd, const std::vector<int>& dims,
                                    double tol) {
  int n = static_cast<int>(dims.size());
  std::size_t total = sd.size();
  std::vector<std::size_t> strides(n, 1);
  for (int k = n - 2; k >= 0; --k) strides[k] = strides[k + 1] * dims[k + 1];
  std::vector<std::vector<int>> moore;
  std::vector<int> off(n, -1);
  while (true) {
    if (std::any_of(off.begin(), off.end(), [](int o) { return o != 0; })) moore.push_back(off);
    int k = n - 1;
    while (k >= 0 && off[k] == 1) off[k--] = -1;
    if (k < 0) break;
    ++off[k];
  }
  auto shift = [&](std::size_t i, const std::vector<int>& o) -> long {
    long j = static_cast<long>(i);
    for (int k = 0; k < n; ++k) {
      int c = static_cast<int>((i / strides[k]) % dims[k]) + o[k];
      if (c < 0 || c >= dims[k]) return -1;
      j += static_cast<long>(o[k]) * static_cast<long>(strides[k]);
    }
    return j;
  };
  std::vector<Tag> tags(total, Tag::exterior);
  for (std::size_t i = 0; i < total; ++i) {
    if (!(sd[i] < -tol)) continue;
    bool ok = true;
    for (const auto& o : moore) {
      long j = shift(i, o);
      if (j < 0 || sd[j] > tol) {
        ok = false;
        break;
      }
    }
    if (ok) tags[i] = Tag::interior;
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (tags[i] != Tag::interior) continue;
    for (const auto& o : moore) {
      long j = shift(i, o);
      if (j >= 0 && tags[j] == Tag::exterior) tags[j] = Tag::boundary;
    }
  }
  return tags;
}

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline DomainPtr read_mask(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "GRIDMASK v1")
    throw Error("malformed-mask", "missing GRIDMASK v1 header");
  if (!std::getline(in, line)) throw Error("malformed-mask", "missing size line");
  std::istringstream ss(line);
  int n = 0;
  double h = 0;
  if (!(ss >> n >> h) || n < 1 || !(h > 0)) throw Error("malformed-mask", "bad size line");
  std::vector<int> dims(n);
  for (int k = 0; k < n; ++k)
    if (!(ss >> dims[k]) || dims[k] < 1) throw Error("malformed-mask", "bad dims");
  if (!std::getline(in, line)) throw Error("malformed-mask", "missing origin line");
  std::istringstream so(line);
  Point origin(n);
  for (int k = 0; k < n; ++k)
    if (!(so >> origin[k])) throw Error("malformed-mask", "bad origin");
  std::size_t total = 1;
  for (int d : dims) total *= d;
  std::vector<Tag> tags;
  tags.reserve(total);
  char c;
  while (in.get(c)) {
    if (c == 'I') tags.push_back(Tag::interior);
    else if (c == 'B') tags.push_back(Tag::boundary);
    else if (c == 'E') tags.push_back(Tag::exterior);
    else if (!std::isspace(static_cast<unsigned char>(c)))
      throw Error("malformed-mask", std::string("unexpected character '") + c + "'");
  }
  if (tags.size() != total) throw Error("malformed-mask", "expected " + std::to_string(total) +
                                                             " tags, got " + std::to_string(tags.size()));
  return std::make_shared<const GridDomain>(h, origin, dims, tags);
}

inline void write_mask(std::ostream& out, const GridDomain& d) {
  auto prec = out.precision(17);
  out << "GRIDMASK v1\n" << d.dim() << ' ' << d.spacing();
  for (int v : d.dims()) out << ' ' << v;
  out << '\n';
  for (int k = 0; k < d.dim(); ++k) out << (k ? " " : "") << d.origin()[k];
  out << '\n';
  std::size_t row = d.dims().back();
  for (std::size_t i = 0; i < d.size(); ++i) {
    Tag t = d.tag(i);
    out << (t == Tag::interior ? 'I' : t == Tag::boundary ? 'B' : 'E');
    if ((i + 1) % row == 0) out << '\n';
  }
  out.precision(prec);
}

inline DomainPtr build_domain(const Shape& shape, double h) {
  if (!(h > 0)) throw Error("parameter", "spacing must be positive");
  if (auto* m = std::get_if<MaskText>(&shape)) {
    std::istringstream in(m->text);
    return read_mask(in);
  }
  Point origin;
  std::vector<int> dims;
  Radii exact;
  double diam = 0;
  std::function<double(const double*)> sd;
  int n = 0;
  if (auto* b = std::get_if<Ball>(&shape)) {
    if (!(b->radius > 0)) throw Error("parameter", "ball radius must be positive");
    n = static_cast<int>(b->center.size());
    int k = static_cast<int>(std::ceil(b->radius / h)) + 1;
    for (int a = 0; a < n; ++a) {
      origin.push_back(b->center[a] - k * h);
      dims.push_back(2 * k + 1);
    }
    exact = {b->radius, b->center, b->radius, b->center};
    diam = 2 * b->radius;
    Ball ball = *b;
    sd = [ball, n](const double* x) { return distance(x, ball.center.data(), n) - ball.radius; };
  } else {
    const Box& bx = std::get<Box>(shape);
    n = static_cast<int>(bx.lo.size());
    if (bx.hi.size() != bx.lo.size()) throw Error("parameter", "box corners differ in dimension");
    Point c(n);
    double half_min = inf, diag = 0;
    for (int a = 0; a < n; ++a) {
      if (!(bx.hi[a] > bx.lo[a])) throw Error("parameter", "box needs hi > lo");
      origin.push_back(bx.lo[a]);
      dims.push_back(static_cast<int>(std::floor((bx.hi[a] - bx.lo[a]) / h + 1e-9)) + 1);
      c[a] = 0.5 * (bx.lo[a] + bx.hi[a]);
      half_min = std::min(half_min, 0.5 * (bx.hi[a] - bx.lo[a]));
      diag += (bx.hi[a] - bx.lo[a]) * (bx.hi[a] - bx.lo[a]);
    }
    exact = {0.5 * std::sqrt(diag), c, half_min, c};
    diam = std::sqrt(diag);
    Box box = bx;
    sd = [box, n](const double* x) {
      double out = 0, in = -inf;
      for (int a = 0; a < n; ++a) {
        double q = std::max(box.lo[a] - x[a], x[a] - box.hi[a]);
        out += std::max(q, 0.0) * std::max(q, 0.0);
        in = std::max(in, q);
      }
      return out > 0 ? std::sqrt(out) : in;
    };
  }
  std::size_t total = 1;
  for (int v : dims) total *= v;
  std::vector<double> sdv(total);
  std::vector<std::size_t> strides(n, 1);
  for (int a = n - 2; a >= 0; --a) strides[a] = strides[a + 1] * dims[a + 1];
  Point x(n);
  for (std::size_t i = 0; i < total; ++i) {
    for (int a = 0; a < n; ++a) x[a] = origin[a] + h * static_cast<double>((i / strides[a]) % dims[a]);
    sdv[i] = sd(x.data());
  }
  auto tags = detail::tag_lattice(sdv, dims, 1e-12 * h);
  if (std::none_of(tags.begin(), tags.end(), [](Tag t) { return t == Tag::interior; }))
    throw Error("empty-interior", "spacing too coarse for this shape");
  return std::make_shared<const GridDomain>(h, origin, dims, tags, exact, diam);
}

inline Radii radii(const GridDomain& d) { return d.radii(); }

// Values on every lattice node; exterior entries are kept at zero and never read.
struct ScalarField {
  DomainPtr dom;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(DomainPtr d, double fill = 0.0) : dom(std::move(d)), v(dom->size(), 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (dom->tag(i) != Tag::exterior) v[i] = fill;
  }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

template <class F>
ScalarField sample(DomainPtr d, F&& fn) {
  ScalarField u(d);
  Point x(d->dim());
  for (std::size_t i = 0; i < d->size(); ++i) {
    if (d->tag(i) == Tag::exterior) continue;
    d->point(i, x.data());
    u[i] = fn(x);
  }
  return u;
}

inline void require_same_domain(const ScalarField& a, const ScalarField& b) {
  if (a.dom != b.dom && !a.dom->same_as(*b.dom))
    throw Error("domain-mismatch", "fields live on different grids");
}

struct FieldStats {
  double sup = -inf, inf_ = inf;
};

inline FieldStats stats(const ScalarField& u, bool interior_only = false) {
  FieldStats s;
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    Tag t = u.dom->tag(i);
    if (t == Tag::exterior || (interior_only && t != Tag::interior)) continue;
    s.sup = std::max(s.sup, u[i]);
    s.inf_ = std::min(s.inf_, u[i]);
  }
  return s;
}

struct BoundaryTrace {
  DomainPtr dom;
  std::vector<double> v;
  double ell = 0, L = 0;

  BoundaryTrace() = default;
  BoundaryTrace(DomainPtr d, std::vector<double> values) : dom(std::move(d)), v(std::move(values)) {
    ell = inf;
    L = -inf;
    for (std::size_t i : dom->boundary()) {
      if (!std::isfinite(v[i])) throw Error("parameter", "boundary value not finite");
      ell = std::min(ell, v[i]);
      L = std::max(L, v[i]);
    }
  }
  double operator[](std::size_t i) const { return v[i]; }
  double sup_abs() const { return std::max(std::fabs(ell), std::fabs(L)); }
};

inline BoundaryTrace constant_trace(DomainPtr d, double c) {
  std::vector<double> v(d->size(), 0.0);
  for (std::size_t i : d->boundary()) v[i] = c;
  return BoundaryTrace(d, std::move(v));
}

template <class F>
BoundaryTrace make_trace(DomainPtr d, F&& fn) {
  std::vector<double> v(d->size(), 0.0);
  Point x(d->dim());
  for (std::size_t i : d->boundary()) {
    d->point(i, x.data());
    v[i] = fn(x);
  }
  return BoundaryTrace(d, std::move(v));
}

inline BoundaryTrace trace_of(const ScalarField& u) {
  std::vector<double> v(u.dom->size(), 0.0);
  for (std::size_t i : u.dom->boundary()) v[i] = u[i];
  return BoundaryTrace(u.dom, std::move(v));
}

inline double oscillation(const BoundaryTrace& b) { return b.L - b.ell; }

}  // namespace inflap
