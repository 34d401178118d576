#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "verify.hpp"

namespace inflap {

// Validated run description read from a JSON config. See README for the schema.
struct RunConfig {
  std::string action;
  Json domain;  // {"shape": "ball"|"box"|"mask", ...}
  std::string rhs = "0";
  std::map<std::string, std::string> coefficients;
  std::optional<Sign> sign;
  std::optional<Monotone> monotone;
  std::optional<double> boundary_constant;
  std::optional<std::string> boundary_expression;
  SolveOptions solve;
  CriteriaOptions criteria;
  // radial
  std::string radial_h = "(exp t)";
  double radial_ell = 0, radial_a = 1, radial_prefactor = inv_sqrt2;
  int radial_nodes = 2000;
  // family
  double gamma = 7;
  int k = 1;
  std::filesystem::path base_dir = ".";  // mask files resolve against the config's directory
};

namespace cli_detail {

inline const std::set<std::string> actions{"solve", "perron", "probe", "radial", "family", "criteria", "verify"};

inline std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line, col = 1;
    else ++col;
  }
  return {line, col};
}

inline void only_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error("config", "'" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error("config", "unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
  }
}

inline double num(const Json& j, const std::string& key) {
  if (!j.is_number()) throw Error("config", "'" + key + "' must be a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& key) {
  if (!j.is_number_integer()) throw Error("config", "'" + key + "' must be an integer");
  return j.get<int>();
}

inline std::string str(const Json& j, const std::string& key) {
  if (!j.is_string()) throw Error("config", "'" + key + "' must be a string");
  return j.get<std::string>();
}

inline Point point(const Json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw Error("config", "'" + key + "' must be a non-empty array of numbers");
  Point p;
  for (const auto& v : j) p.push_back(num(v, key));
  return p;
}

inline void check_expression(const std::string& text, const std::string& key) {
  try {
    parse_expression(text);
  } catch (const Error& e) {
    throw Error("config", "'" + key + "': " + e.what());
  }
}

}  // namespace cli_detail

inline RunConfig parse_config(const std::string& text, const std::string& action = "") {
  using namespace cli_detail;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    // position is where the reader stopped, i.e. the end of the offending token
    std::string what = e.what(), detail;
    if (auto k = what.find(" - "); k != std::string::npos) detail = ": " + what.substr(k + 3);
    throw Error("config",
                "JSON parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + detail);
  }
  only_keys(j, "", {"action", "domain", "rhs", "coefficients", "rhs_sign", "rhs_monotone", "boundary", "scheme",
                    "solve", "criteria", "radial", "family"});
  RunConfig c;
  if (j.contains("action")) c.action = str(j["action"], "action");
  if (!action.empty()) {
    if (!c.action.empty() && c.action != action)
      throw Error("config", "config action '" + c.action + "' disagrees with command line '" + action + "'");
    c.action = action;
  }
  if (!actions.count(c.action)) throw Error("config", "unknown or missing action '" + c.action + "'");

  bool needs_domain = c.action != "radial";
  if (j.contains("domain")) {
    const Json& d = j["domain"];
    if (!d.is_object() || !d.contains("shape")) throw Error("config", "'domain.shape' is required");
    std::string shape = str(d["shape"], "domain.shape");
    if (shape == "ball") {
      only_keys(d, "domain", {"shape", "center", "radius", "h"});
      point(d.value("center", Json::array({0, 0})), "domain.center");
      if (!d.contains("radius")) throw Error("config", "'domain.radius' is required");
      num(d["radius"], "domain.radius");
    } else if (shape == "box") {
      only_keys(d, "domain", {"shape", "lo", "hi", "h"});
      if (!d.contains("lo") || !d.contains("hi")) throw Error("config", "'domain.lo' and 'domain.hi' are required");
      if (point(d["lo"], "domain.lo").size() != point(d["hi"], "domain.hi").size())
        throw Error("config", "'domain.lo' and 'domain.hi' differ in dimension");
    } else if (shape == "mask") {
      only_keys(d, "domain", {"shape", "file"});
      if (!d.contains("file")) throw Error("config", "'domain.file' is required");
      str(d["file"], "domain.file");
    } else {
      throw Error("config", "'domain.shape' must be ball, box or mask");
    }
    if (shape != "mask") {
      if (!d.contains("h")) throw Error("config", "'domain.h' is required");
      num(d["h"], "domain.h");
    }
    c.domain = d;
  } else if (needs_domain) {
    throw Error("config", "'domain' is required for action " + c.action);
  }

  if (j.contains("rhs")) c.rhs = str(j["rhs"], "rhs");
  check_expression(c.rhs, "rhs");
  if (j.contains("coefficients")) {
    const Json& co = j["coefficients"];
    if (!co.is_object()) throw Error("config", "'coefficients' must be an object");
    for (auto it = co.begin(); it != co.end(); ++it) {
      std::string key = "coefficients." + it.key();
      c.coefficients[it.key()] = str(it.value(), key);
      check_expression(c.coefficients[it.key()], key);
    }
  }
  if (j.contains("rhs_sign")) {
    std::string s = str(j["rhs_sign"], "rhs_sign");
    if (s == "nonneg") c.sign = Sign::nonneg;
    else if (s == "nonpos") c.sign = Sign::nonpos;
    else throw Error("config", "'rhs_sign' must be nonneg or nonpos");
  }
  if (j.contains("rhs_monotone")) {
    std::string s = str(j["rhs_monotone"], "rhs_monotone");
    if (s == "nondecreasing") c.monotone = Monotone::nondecreasing;
    else if (s == "nonincreasing") c.monotone = Monotone::nonincreasing;
    else throw Error("config", "'rhs_monotone' must be nondecreasing or nonincreasing");
  }

  if (j.contains("boundary")) {
    const Json& b = j["boundary"];
    only_keys(b, "boundary", {"constant", "expression"});
    if (b.contains("constant") == b.contains("expression"))
      throw Error("config", "'boundary' needs exactly one of constant, expression");
    if (b.contains("constant")) c.boundary_constant = num(b["constant"], "boundary.constant");
    else {
      c.boundary_expression = str(b["expression"], "boundary.expression");
      check_expression(*c.boundary_expression, "boundary.expression");
    }
  } else {
    c.boundary_constant = 0.0;
  }

  if (j.contains("scheme")) {
    only_keys(j["scheme"], "scheme", {"width"});
    if (j["scheme"].contains("width")) c.solve.scheme.width = integer(j["scheme"]["width"], "scheme.width");
  }
  if (j.contains("solve")) {
    const Json& s = j["solve"];
    only_keys(s, "solve", {"tol", "max_sweeps", "theta", "order", "alarm_bound", "newton", "gs_block"});
    if (s.contains("tol")) c.solve.tol = num(s["tol"], "solve.tol");
    if (s.contains("max_sweeps")) c.solve.max_sweeps = integer(s["max_sweeps"], "solve.max_sweeps");
    if (s.contains("theta")) c.solve.theta = num(s["theta"], "solve.theta");
    if (s.contains("alarm_bound")) c.solve.alarm_bound = num(s["alarm_bound"], "solve.alarm_bound");
    if (s.contains("gs_block")) c.solve.gs_block = integer(s["gs_block"], "solve.gs_block");
    if (s.contains("newton")) {
      if (!s["newton"].is_boolean()) throw Error("config", "'solve.newton' must be a boolean");
      c.solve.newton = s["newton"].get<bool>();
    }
    if (s.contains("order")) {
      std::string o = str(s["order"], "solve.order");
      if (o == "lexicographic") c.solve.order = SweepOrder::lexicographic;
      else if (o == "red_black") c.solve.order = SweepOrder::red_black;
      else throw Error("config", "'solve.order' must be lexicographic or red_black");
    }
  }
  if (j.contains("criteria")) {
    const Json& s = j["criteria"];
    only_keys(s, "criteria", {"eta_max", "growth_probe_tol"});
    if (s.contains("eta_max")) c.criteria.eta_max = num(s["eta_max"], "criteria.eta_max");
    if (s.contains("growth_probe_tol"))
      c.criteria.growth_probe_tol = num(s["growth_probe_tol"], "criteria.growth_probe_tol");
  }
  if (j.contains("radial")) {
    const Json& s = j["radial"];
    only_keys(s, "radial", {"h", "ell", "a", "prefactor", "nodes"});
    if (s.contains("h")) c.radial_h = str(s["h"], "radial.h");
    check_expression(c.radial_h, "radial.h");
    if (s.contains("ell")) c.radial_ell = num(s["ell"], "radial.ell");
    if (s.contains("a")) c.radial_a = num(s["a"], "radial.a");
    if (s.contains("nodes")) c.radial_nodes = integer(s["nodes"], "radial.nodes");
    if (s.contains("prefactor")) {
      std::string p = s["prefactor"].is_string() ? s["prefactor"].get<std::string>() : "";
      if (p == "1/sqrt2") c.radial_prefactor = inv_sqrt2;
      else c.radial_prefactor = num(s["prefactor"], "radial.prefactor");
      check_prefactor(c.radial_prefactor);
    }
  }
  if (j.contains("family")) {
    const Json& s = j["family"];
    only_keys(s, "family", {"gamma", "k"});
    if (s.contains("gamma")) c.gamma = num(s["gamma"], "family.gamma");
    if (s.contains("k")) c.k = integer(s["k"], "family.k");
  }
  if (c.action == "probe" && !c.solve.alarm_bound) throw Error("config", "action probe needs 'solve.alarm_bound'");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& file, const std::string& action = "") {
  std::ifstream in(file);
  if (!in) throw Error("config", "cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str(), action);
  c.base_dir = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
  return c;
}

inline DomainPtr make_domain(const RunConfig& c, std::optional<double> h_override = {}) {
  using namespace cli_detail;
  const Json& d = c.domain;
  std::string shape = d["shape"];
  if (shape == "mask") {
    std::filesystem::path p = d["file"].get<std::string>();
    if (p.is_relative()) p = c.base_dir / p;
    std::ifstream in(p);
    if (!in) throw Error("config", "cannot read mask file " + p.string());
    return read_mask(in);
  }
  double h = h_override ? *h_override : d["h"].get<double>();
  if (shape == "ball")
    return build_domain(Ball{point(d.value("center", Json::array({0, 0})), "domain.center"), d["radius"].get<double>()}, h);
  return build_domain(Box{point(d["lo"], "domain.lo"), point(d["hi"], "domain.hi")}, h);
}

inline RhsSpec make_rhs(const RunConfig& c) {
  RhsSpec f = make_rhs(c.rhs);
  for (const auto& [k, v] : c.coefficients) set_coef(f, k, v);
  f.sign = c.sign;
  f.monotone = c.monotone;
  return f;
}

inline BoundaryTrace make_boundary(const RunConfig& c, DomainPtr d) {
  if (c.boundary_constant) return constant_trace(d, *c.boundary_constant);
  RhsSpec g = make_rhs(*c.boundary_expression);
  if (uses_t(g.expr)) throw Error("config", "'boundary.expression' may not use t");
  return make_trace(d, [&](const Point& x) { return eval_rhs(g, x.data(), static_cast<int>(x.size()), 0.0); });
}

struct RunOutput {
  int exit_code = 0;
  Json report;
};

namespace cli_detail {

inline Json solve_json(const SolveReport& r) {
  return {{"status", name(r.status)}, {"sweeps", r.sweeps},   {"newton_steps", r.newton_steps},
          {"residual", ext(r.residual)}, {"tol", r.tol},      {"sup", r.sup},
          {"inf", r.inf_},               {"monotone", r.monotone}, {"stalled", r.stalled},
          {"clipped", r.clipped},        {"saturated", r.saturated}};
}

inline int status_code(Status s) {
  return s == Status::converged ? 0 : s == Status::diverged_past_alarm ? 3 : 2;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("io", "cannot write " + p.string());
  out << text;
}

inline void write_field(const std::filesystem::path& p, const ScalarField& u) {
  std::ofstream out(p);
  if (!out) throw Error("io", "cannot write " + p.string());
  write_field_csv(out, u);
}

inline void write_profile_file(const std::filesystem::path& p, const RadialProfile& prof) {
  std::ofstream out(p);
  if (!out) throw Error("io", "cannot write " + p.string());
  write_profile(out, prof);
}

inline std::size_t deepest_node(const GridDomain& d) {
  std::size_t best = d.interior().front();
  for (std::size_t i : d.interior())
    if (d.wall_distance(i) > d.wall_distance(best)) best = i;
  return best;
}

}  // namespace cli_detail

// Runs the action, writes report.json (and CSVs where relevant) into `out`. Exit codes:
// 0 success, 2 failed check or no convergence, 3 diverged past the alarm bound.
inline RunOutput run(const RunConfig& c, const std::filesystem::path& out, std::optional<double> h = {},
                     unsigned seed = 0) {
  using namespace cli_detail;
  std::filesystem::create_directories(out);
  RunOutput o;
  Json& rep = o.report;
  rep["action"] = c.action;

  if (c.action == "radial") {
    auto m = make_monotone_rhs(c.radial_h, c.radial_ell);
    auto prof = build_profile(m, c.radial_a, c.radial_prefactor, c.radial_nodes);
    auto bnd = zeta_bounds(m, c.radial_a, c.radial_ell);
    rep["h"] = c.radial_h;
    rep["ell"] = c.radial_ell;
    rep["a"] = c.radial_a;
    rep["prefactor"] = c.radial_prefactor;
    rep["R"] = prof.R;
    rep["zeta"] = zeta(m, c.radial_a, c.radial_prefactor);
    rep["zeta_lower"] = c.radial_prefactor * bnd.lower;
    rep["zeta_upper"] = c.radial_prefactor * bnd.upper;
    rep["ode_residual"] = profile_ode_residual(prof, m);
    write_profile_file(out / "profile.csv", prof);
    write_text(out / "report.json", json_text(rep));
    return o;
  }

  DomainPtr d = make_domain(c, h);
  rep["domain"] = {{"dim", d->dim()},
                   {"h", d->spacing()},
                   {"interior_nodes", d->interior().size()},
                   {"boundary_nodes", d->boundary().size()},
                   {"in_radius", d->radii().in_radius},
                   {"out_radius", d->radii().out_radius},
                   {"diameter", d->diameter()}};

  if (c.action == "family") {
    auto fam = exact_family(c.gamma, c.k, d);
    rep["gamma"] = c.gamma;
    rep["k"] = c.k;
    rep["amplitude"] = fam.profile.a;
    rep["scale"] = fam.scale;
    rep["sup_norm"] = fam.profile.a * fam.scale;
    rep["sampled_sup_norm"] = std::max(stats(fam.u).sup, -stats(fam.u).inf_);
    auto s = build_stencil(d, c.solve.scheme.width);
    rep["residual_sup"] = residual_field(fam.u, make_rhs("(neg (pow t " + fmt12(c.gamma) + "))"), s).sup;
    write_profile_file(out / "profile.csv", fam.profile);
    write_field(out / "field.csv", fam.u);
    write_text(out / "report.json", json_text(rep));
    return o;
  }

  RhsSpec f = make_rhs(c);
  BoundaryTrace b = make_boundary(c, d);
  rep["rhs"] = c.rhs;

  if (c.action == "criteria") {
    o.report = to_json(criteria_report(f, d, b, c.criteria));
    write_text(out / "report.json", json_text(o.report));
    return o;
  }

  if (c.action == "solve") {
    auto [u, r] = solve_dirichlet(d, f, b, c.solve);
    rep["solve"] = solve_json(r);
    o.exit_code = status_code(r.status);
    write_field(out / "field.csv", u);
  } else if (c.action == "perron") {
    auto cones = theorem_cones(d, f, b, c.criteria.eta_max);
    rep["cones"] = {{"C", cones.C}, {"delta", cones.delta}, {"d_sub", cones.d_sub}, {"d_sup", cones.d_sup}};
    auto [u, r] = perron_solve(d, f, b, cones.sub, cones.super, c.solve);
    rep["solve"] = solve_json(r);
    o.exit_code = status_code(r.status);
    write_field(out / "field.csv", u);
  } else if (c.action == "probe") {
    auto r = probe_nonexistence(d, f, b, c.solve);
    rep["alarm_bound"] = *c.solve.alarm_bound;
    rep["solve"] = solve_json(r);
    o.exit_code = status_code(r.status);
  } else if (c.action == "verify") {
    auto [u, r] = solve_dirichlet(d, f, b, c.solve);
    rep["solve"] = solve_json(r);
    if (r.status != Status::converged) {
      o.exit_code = status_code(r.status);
    } else {
      auto s = build_stencil(d, c.solve.scheme.width);
      Json checks = Json::array();
      checks.push_back(to_json(check_residual(u, f, s, Side::both, r.tol)));
      double R = d->radii().out_radius;
      FieldStats us = stats(u);
      // f evaluated along u stays inside its range over [inf u, sup u]
      Range along = rhs_range(f, *d, us.inf_, us.sup);
      if (!uses_t(f.expr))
        checks.push_back(to_json(check_apriori(u, apriori_box(along.lo, along.hi, b, R), 10 * r.tol)));
      std::size_t z = deepest_node(*d);
      if (std::isfinite(along.lo) && std::isfinite(along.hi)) {
        checks.push_back(to_json(lipschitz_bound(u, z, std::max(std::fabs(along.lo), std::fabs(along.hi)))));
        double rz = d->wall_distance(z) / 2;
        if (us.inf_ >= 0 && rz > 0)
          checks.push_back(to_json(check_harnack(u, std::max(along.hi, 0.0), z, rz,
                                                 harnack_tol(r.tol, d->spacing(), std::max(1.0, us.sup)))));
      }
      if (!x_leaves(f.expr) && effective_monotone(f, *d) == Monotone::nondecreasing) {
        // a second solve from a random start must agree up to the boundary oscillation
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> U(-1, 1);
        ScalarField start(d);
        for (std::size_t i : d->interior()) start[i] = b.ell + (b.L - b.ell + 1) * U(rng);
        auto [v, r2] = solve_dirichlet(d, f, b, c.solve, start);
        checks.push_back(to_json(check_uniqueness(u, v, b, 10 * r.tol)));
      }
      bool ok = true;
      for (const auto& ch : checks) ok = ok && ch["status"] != "fail";
      rep["checks"] = checks;
      o.exit_code = ok ? 0 : 2;
    }
    write_field(out / "field.csv", u);
  }
  write_text(out / "report.json", json_text(rep));
  return o;
}

}  // namespace inflap
