#pragma once

#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <string>

#include "core.hpp"

namespace inflap {

using Json = nlohmann::ordered_json;

inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

// JSON has no infinities; extended reals are written as the strings "+inf" / "-inf".
inline Json ext(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

namespace detail {

inline void dump(const Json& j, std::string& out, int indent, int depth) {
  auto pad = [&](int d) { out += '\n' + std::string(static_cast<std::size_t>(indent * d), ' '); };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        pad(depth + 1);
        out += Json(it.key()).dump() + ": ";
        dump(it.value(), out, indent, depth + 1);
      }
      pad(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        pad(depth + 1);
        dump(j[i], out, indent, depth + 1);
      }
      pad(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: out += fmt12(j.get<double>()); return;
    default: out += j.dump();
  }
}

}  // namespace detail

// Keys in insertion order, floats as %.12e.
inline std::string json_text(const Json& j) {
  std::string out;
  detail::dump(j, out, 2, 0);
  out += '\n';
  return out;
}

// One row per non-exterior node: coordinates, then the value.
inline void write_field_csv(std::ostream& out, const ScalarField& u) {
  const GridDomain& d = *u.dom;
  out << "# FIELD dim=" << d.dim() << " h=" << fmt12(d.spacing()) << '\n';
  Point x(d.dim());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.tag(i) == Tag::exterior) continue;
    d.point(i, x.data());
    for (double c : x) out << fmt12(c) << ',';
    out << fmt12(u[i]) << '\n';
  }
}

}  // namespace inflap
