#include "carleman/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "carleman/bicharacteristics.hpp"
#include "carleman/control.hpp"
#include "carleman/distance.hpp"
#include "carleman/expr.hpp"
#include "carleman/grid.hpp"
#include "carleman/multiplier.hpp"
#include "carleman/pseudoconvexity.hpp"
#include "carleman/ratio.hpp"
#include "carleman/report_io.hpp"
#include "carleman/svg.hpp"
#include "carleman/sweep.hpp"
#include "carleman/toml.hpp"
#include "carleman/util.hpp"
#include "carleman/wave.hpp"

namespace carleman {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::config,
              where.empty() ? "config: " + what : "config: " + where + ": " + what);
}

// JSON-safe number: infinities and NaN become their decimal-string names
// (plain JSON has no encoding for them).
json jnum(double v) { return std::isfinite(v) ? json(v) : json(format_exact(v)); }

// ---------------------------------------------------------------------------
// Typed, path-tracking access into the parsed config.

class View {
 public:
  View(const TomlValue& v, std::string path) : v_(&v), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

  bool has(const std::string& k) const {
    return v_->kind == TomlValue::Kind::table && v_->table.count(k) != 0;
  }

  View child(const std::string& k) const {
    if (v_->kind != TomlValue::Kind::table) bad(path_, "expected a table");
    const auto it = v_->table.find(k);
    if (it == v_->table.end()) bad(path_, "missing required key '" + k + "'");
    return View(it->second, join(k));
  }

  View table(const std::string& k) const {
    View c = child(k);
    if (c.v_->kind != TomlValue::Kind::table) bad(c.path_, "expected a table");
    return c;
  }

  // Rejects keys outside the schema so typos surface as config errors.
  void allow_keys(std::initializer_list<const char*> keys) const {
    if (v_->kind != TomlValue::Kind::table) bad(path_, "expected a table");
    for (const auto& [k, v] : v_->table) {
      (void)v;
      bool known = false;
      for (const char* a : keys)
        if (k == a) known = true;
      if (!known) bad(path_, "unknown key '" + k + "'");
    }
  }

  std::string str() const {
    if (v_->kind != TomlValue::Kind::string) wrong("a string");
    return v_->s;
  }
  bool flag() const {
    if (v_->kind != TomlValue::Kind::boolean) wrong("a boolean");
    return v_->b;
  }
  double num() const {
    if (!v_->is_number()) wrong("a number");
    return v_->number();
  }
  std::int64_t integer() const {
    if (v_->kind != TomlValue::Kind::integer) wrong("an integer");
    return v_->i;
  }

  std::string str(const std::string& k) const { return child(k).str(); }
  double num(const std::string& k) const { return child(k).num(); }
  std::int64_t integer(const std::string& k) const { return child(k).integer(); }

  std::string str_or(const std::string& k, const std::string& dflt) const {
    return has(k) ? child(k).str() : dflt;
  }
  double num_or(const std::string& k, double dflt) const {
    return has(k) ? child(k).num() : dflt;
  }
  std::int64_t int_or(const std::string& k, std::int64_t dflt) const {
    return has(k) ? child(k).integer() : dflt;
  }
  bool flag_or(const std::string& k, bool dflt) const {
    return has(k) ? child(k).flag() : dflt;
  }

  std::vector<double> nums(const std::string& k, int required = -1) const {
    const View a = child(k);
    if (a.v_->kind != TomlValue::Kind::array) a.wrong("an array of numbers");
    std::vector<double> out;
    out.reserve(a.v_->array.size());
    for (const TomlValue& e : a.v_->array) {
      if (!e.is_number()) a.wrong("an array of numbers");
      out.push_back(e.number());
    }
    if (required >= 0 && int(out.size()) != required)
      bad(a.path_, "expected " + std::to_string(required) + " entries, found " +
                       std::to_string(out.size()));
    return out;
  }

  std::vector<std::int64_t> ints(const std::string& k, int required = -1) const {
    const View a = child(k);
    if (a.v_->kind != TomlValue::Kind::array) a.wrong("an array of integers");
    std::vector<std::int64_t> out;
    for (const TomlValue& e : a.v_->array) {
      if (e.kind != TomlValue::Kind::integer) a.wrong("an array of integers");
      out.push_back(e.i);
    }
    if (required >= 0 && int(out.size()) != required)
      bad(a.path_, "expected " + std::to_string(required) + " entries, found " +
                       std::to_string(out.size()));
    return out;
  }

  std::vector<std::string> strs(const std::string& k, int required = -1) const {
    const View a = child(k);
    if (a.v_->kind != TomlValue::Kind::array) a.wrong("an array of strings");
    std::vector<std::string> out;
    for (const TomlValue& e : a.v_->array) {
      if (e.kind != TomlValue::Kind::string) a.wrong("an array of strings");
      out.push_back(e.s);
    }
    if (required >= 0 && int(out.size()) != required)
      bad(a.path_, "expected " + std::to_string(required) + " entries, found " +
                       std::to_string(out.size()));
    return out;
  }

 private:
  std::string join(const std::string& k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  [[noreturn]] void wrong(const std::string& want) const {
    std::string got = type_name(v_->kind);
    if (v_->line > 0)
      got += " (line " + std::to_string(v_->line) + ")";
    bad(path_, "expected " + want + ", found " + got);
  }

  const TomlValue* v_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Artifact sink.

struct Out {
  fs::path dir;
  json artifacts = json::array();

  void text(const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::io, "cannot write artifact: " + (dir / name).string());
    f << content;
    if (!f) throw Error(ErrorCode::io, "cannot write artifact: " + (dir / name).string());
    artifacts.push_back(name);
  }

  void svg(const std::string& name, const std::vector<PlotSeries>& series,
           const PlotOptions& opt) {
    text(name, render_line_plot(series, opt));
  }

  void grid(const std::string& name, const GridPayload& payload) {
    write_grid(dir / name, payload);
    artifacts.push_back(name);
  }
};

// ---------------------------------------------------------------------------
// Shared pieces of the schema.

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

ScalarField parse_field(const View& v, int dim, VarConvention conv) {
  const std::string src = v.str();
  try {
    return parse(src, dim, conv);
  } catch (const ParseError& e) {
    bad(v.path(), std::string("expression error: ") + e.what());
  }
}

std::vector<ExprPtr> parse_fields(const View& parent, const std::string& key,
                                  int count, int dim, VarConvention conv) {
  const auto srcs = parent.strs(key, count);
  std::vector<ExprPtr> out;
  out.reserve(srcs.size());
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    try {
      out.push_back(parse(srcs[i], dim, conv));
    } catch (const ParseError& e) {
      bad(parent.path() + "." + key + "[" + std::to_string(i) + "]",
          std::string("expression error: ") + e.what());
    }
  }
  return out;
}

PrincipalSymbol parse_operator(const View& op) {
  op.allow_keys({"mode", "dim", "g_upper", "a_upper", "time_space"});
  const std::string mode = op.str("mode");
  const int dim = int(op.integer("dim"));
  if (dim < 1 || dim > 8) bad(op.path() + ".dim", "dimension must be in [1, 8]");
  if (mode == "minkowski") return PrincipalSymbol::minkowski(dim);
  if (mode == "laplace") return PrincipalSymbol::laplace(dim);
  if (mode == "wave") {
    if (!op.has("g_upper")) return PrincipalSymbol::minkowski(dim);
    return PrincipalSymbol::wave(
        dim, parse_fields(op, "g_upper", dim * (dim + 1) / 2, dim,
                          VarConvention::spatial));
  }
  if (mode == "general") {
    const bool ts = op.flag_or("time_space", false);
    const VarConvention conv = ts ? VarConvention::time_space : VarConvention::spatial;
    return PrincipalSymbol::general(
        dim, parse_fields(op, "a_upper", dim * (dim + 1) / 2, dim, conv), conv);
  }
  bad(op.path() + ".mode", "unknown operator mode '" + mode + "'");
}

GridDomain parse_grid(const View& g) {
  g.allow_keys({"dim", "lo", "hi", "n", "metric_upper", "mask"});
  const int dim = int(g.integer("dim"));
  if (dim < 1 || dim > 3) bad(g.path() + ".dim", "dimension must be 1, 2 or 3");
  const auto lov = g.nums("lo", dim);
  const auto hiv = g.nums("hi", dim);
  const auto nv = g.ints("n", dim);
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  std::array<int, 3> n{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    lo[a] = lov[a];
    hi[a] = hiv[a];
    if (!(lo[a] < hi[a])) bad(g.path(), "lo must be strictly below hi on every axis");
    if (nv[a] < 2 || nv[a] > 4096)
      bad(g.path() + ".n", "grid counts must be in [2, 4096]");
    n[a] = int(nv[a]);
  }
  std::vector<ExprPtr> metric;
  if (g.has("metric_upper"))
    metric = parse_fields(g, "metric_upper", dim * (dim + 1) / 2, dim,
                          VarConvention::spatial);

  std::vector<std::uint8_t> mask;
  if (g.has("mask")) {
    const ScalarField m = parse_field(g.child("mask"), dim, VarConvention::spatial);
    const GridDomain bare = GridDomain::make(dim, lo, hi, n);
    mask.resize(bare.size());
    std::size_t active = 0;
    for (std::size_t idx = 0; idx < bare.size(); ++idx) {
      mask[idx] = eval_value(m, bare.point(idx)) > 0.0 ? 1 : 0;
      active += mask[idx];
    }
    if (active == 0) bad(g.path() + ".mask", "mask selects no grid point");
  }
  return GridDomain::make(dim, lo, hi, n, std::move(metric), std::move(mask));
}

// Membership mask of {expr > 0} over the active nodes.
std::vector<std::uint8_t> set_mask(const GridDomain& dom, const View& v) {
  const ScalarField f = parse_field(v, dom.dim(), VarConvention::spatial);
  std::vector<std::uint8_t> out(dom.size(), 0);
  std::size_t members = 0;
  for (std::size_t idx = 0; idx < dom.size(); ++idx) {
    if (!dom.masked(idx)) continue;
    out[idx] = eval_value(f, dom.point(idx)) > 0.0 ? 1 : 0;
    members += out[idx];
  }
  if (members == 0) bad(v.path(), "set expression selects no grid point");
  return out;
}

CheckOptions parse_check_options(const View& root, const PrincipalSymbol& p) {
  CheckOptions opt;
  if (!root.has("check")) return opt;
  const View c = root.table("check");
  c.allow_keys({"target", "mode", "lattice_points", "delta_feas", "polish_starts",
                "polish_iters"});
  opt.lattice_points = int(c.int_or("lattice_points", opt.lattice_points));
  if (opt.lattice_points < 64 || opt.lattice_points > (1 << 22))
    bad(c.path() + ".lattice_points", "must be in [64, 2^22]");
  opt.delta_feas = c.num_or("delta_feas", opt.delta_feas);
  if (!(opt.delta_feas > 0.0) || opt.delta_feas >= 1.0)
    bad(c.path() + ".delta_feas", "must lie in (0, 1)");
  opt.polish_starts = int(c.int_or("polish_starts", opt.polish_starts));
  opt.polish_iters = int(c.int_or("polish_iters", opt.polish_iters));
  if (opt.polish_starts < 0 || opt.polish_iters < 0)
    bad(c.path(), "polish counts must be nonnegative");
  const std::string mode = c.str_or("mode", "full");
  if (mode == "xit0") {
    if (!p.wave_type())
      bad(c.path() + ".mode", "the xi_t = 0 restriction needs a wave-type operator");
    opt.mode = CheckMode::xit0;
  } else if (mode != "full") {
    bad(c.path() + ".mode", "unknown check mode '" + mode + "'");
  }
  return opt;
}

json witness_json(const Witness& w) {
  json j;
  j["xi"] = std::vector<double>(w.xi.data(), w.xi.data() + w.xi.size());
  j["tau"] = w.tau;
  j["value"] = w.value;
  j["condition"] = w.condition;
  return j;
}

// Delta-sensitivity table of a check report as CSV + plot.
void check_artifacts(const CheckReport& rep, Out& out) {
  std::ostringstream csv;
  csv << "condition,delta,margin\n";
  std::vector<PlotSeries> series;
  for (const auto& c : rep.conditions) {
    PlotSeries s;
    s.label = c.name + " condition";
    for (const auto& [key, margin] : c.delta_margins) {
      const double delta = std::strtod(key.c_str(), nullptr);
      csv << c.name << "," << format_exact(delta) << ","
          << (std::isnan(margin) ? "" : format_exact(margin)) << "\n";
      if (!std::isnan(margin)) {
        s.x.push_back(delta);
        s.y.push_back(margin);
      }
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  out.text("margins.csv", csv.str());
  if (!series.empty()) {
    PlotOptions po;
    po.title = "margin against constraint thickness";
    po.x_label = "delta";
    po.y_label = "margin";
    po.log_x = true;
    out.svg("margins.svg", series, po);
  }
}

// ---------------------------------------------------------------------------
// check-surface

std::string run_check_surface(const View& root, Out& out, json& rep,
                              std::uint64_t, int) {
  root.allow_keys({"kind", "expect", "title", "operator", "surface", "check"});
  const PrincipalSymbol p = parse_operator(root.table("operator"));
  const View sv = root.table("surface");
  sv.allow_keys({"psi", "x0"});
  const ScalarField psi = parse_field(sv.child("psi"), p.dim(), p.convention());
  const Eigen::VectorXd x0 = to_vec(sv.nums("x0", p.dim()));
  const CheckOptions opt = parse_check_options(root, p);
  std::string target = "surface";
  if (root.has("check")) target = root.table("check").str_or("target", "surface");
  if (target != "surface" && target != "function")
    bad("check.target", "must be 'surface' or 'function'");

  const CheckReport r = target == "surface"
                            ? check_surface_pseudoconvex(p, psi, x0, opt)
                            : check_function_pseudoconvex(p, psi, x0, opt);
  rep["surface"] = {{"psi", to_string(psi, p.convention())},
                    {"x0", sv.nums("x0", p.dim())},
                    {"target", target}};
  rep["check"] = r.to_json();
  check_artifacts(r, out);
  return to_string(r.verdict);
}

// ---------------------------------------------------------------------------
// convexify

void weight_profile_artifacts(const ScalarField& base, const ScalarField& weight,
                              const Eigen::VectorXd& x0, VarConvention conv,
                              double radius, Out& out) {
  const int dim = int(x0.size());
  const int ns = 201;
  std::ostringstream csv;
  csv << "s";
  for (int a = 0; a < dim; ++a) {
    const std::string v = variable_name(conv, a);
    csv << ",base_" << v << ",weight_" << v;
  }
  csv << "\n";
  std::vector<PlotSeries> series(dim);
  for (int a = 0; a < dim; ++a)
    series[a].label = "along " + variable_name(conv, a);
  for (int i = 0; i < ns; ++i) {
    const double s = -radius + 2.0 * radius * i / double(ns - 1);
    csv << format_exact(s);
    for (int a = 0; a < dim; ++a) {
      Eigen::VectorXd x = x0;
      x[a] += s;
      const double b = eval_value(base, x);
      const double w = eval_value(weight, x);
      csv << "," << format_exact(b) << "," << format_exact(w);
      series[a].x.push_back(s);
      series[a].y.push_back(w);
    }
    csv << "\n";
  }
  out.text("weight_profile.csv", csv.str());
  PlotOptions po;
  po.title = "derived weight along the axes";
  po.x_label = "offset from the base point";
  po.y_label = "weight";
  out.svg("weight_profile.svg", series, po);
}

std::string run_convexify(const View& root, Out& out, json& rep,
                          std::uint64_t seed, int) {
  root.allow_keys({"kind", "expect", "title", "operator", "surface", "convexify",
                   "check"});
  const PrincipalSymbol p = parse_operator(root.table("operator"));
  const View sv = root.table("surface");
  sv.allow_keys({"psi", "x0"});
  const ScalarField psi = parse_field(sv.child("psi"), p.dim(), p.convention());
  const Eigen::VectorXd x0 = to_vec(sv.nums("x0", p.dim()));
  const CheckOptions opt = parse_check_options(root, p);

  const View cv = root.table("convexify");
  cv.allow_keys({"variant", "profile_radius"});
  const std::string variant = cv.str("variant");
  const double radius = cv.num_or("profile_radius", 1.0);
  if (!(radius > 0.0)) bad(cv.path() + ".profile_radius", "must be positive");

  rep["surface"] = {{"psi", to_string(psi, p.convention())},
                    {"x0", sv.nums("x0", p.dim())},
                    {"variant", variant}};

  json cj;
  ScalarField weight;
  std::string verdict;
  try {
    if (variant == "analytic") {
      const ConvexifyResult r = convexify_analytic(p, psi, x0, seed, opt);
      cj["lambda0"] = r.lambda0;
      cj["identity_residual"] = r.identity_residual;
      cj["check"] = r.report.to_json();
      weight = r.weight;
      verdict = to_string(r.report.verdict);
    } else if (variant == "shift" || variant == "quadratic") {
      const GeometricVariant gv = variant == "shift" ? GeometricVariant::shift
                                                     : GeometricVariant::quadratic;
      const GeometricResult r = convexify_geometric(p, psi, x0, gv, opt);
      cj["eps"] = r.eps;
      if (variant == "quadratic") {
        cj["eta"] = r.eta;
        cj["R0"] = r.R0;
        cj["ring_slack"] = r.ring_slack;
      }
      cj["check"] = r.report.to_json();
      weight = r.weight;
      verdict = to_string(r.report.verdict);
    } else {
      bad(cv.path() + ".variant", "must be 'analytic', 'shift' or 'quadratic'");
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::schedule) throw;
    // Exhausting the parameter schedule is a negative result, not a crash.
    cj["schedule_exhausted"] = true;
    cj["message"] = e.what();
    verdict = "fail";
  }
  rep["convexify"] = cj;
  if (weight) {
    weight_profile_artifacts(psi, weight, x0, p.convention(), radius, out);
    rep["weight"] = to_string(weight, p.convention());
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// flow

std::string run_flow(const View& root, Out& out, json& rep, std::uint64_t, int) {
  root.allow_keys({"kind", "expect", "title", "operator", "flow", "tangency",
                   "require"});
  const View fl = root.table("flow");
  fl.allow_keys({"x0", "xi0", "s_max", "step", "box_halfwidth", "first_order",
                 "convention"});

  HamiltonSystem H = [&]() {
    if (fl.has("first_order")) {
      if (root.has("operator"))
        bad(fl.path(), "give either [operator] or flow.first_order, not both");
      const std::string cs = fl.str_or("convention", "spatial");
      if (cs != "spatial" && cs != "time_space")
        bad(fl.path() + ".convention", "must be 'spatial' or 'time_space'");
      const VarConvention conv =
          cs == "spatial" ? VarConvention::spatial : VarConvention::time_space;
      const auto srcs = fl.strs("first_order");
      if (srcs.empty()) bad(fl.path() + ".first_order", "needs at least one field");
      return HamiltonSystem::first_order(
          parse_fields(fl, "first_order", int(srcs.size()), int(srcs.size()), conv),
          conv);
    }
    return HamiltonSystem::quadratic(parse_operator(root.table("operator")));
  }();

  const int dim = H.dim();
  const Eigen::VectorXd x0 = to_vec(fl.nums("x0", dim));
  const Eigen::VectorXd xi0 = to_vec(fl.nums("xi0", dim));
  const double s_max = fl.num("s_max");
  if (s_max == 0.0) bad(fl.path() + ".s_max", "must be nonzero");
  FlowOptions fo;
  fo.step = fl.num_or("step", fo.step);
  if (!(fo.step > 0.0)) bad(fl.path() + ".step", "must be positive");
  fo.box_halfwidth = fl.num_or("box_halfwidth", fo.box_halfwidth);
  if (!(fo.box_halfwidth > 0.0)) bad(fl.path() + ".box_halfwidth", "must be positive");

  double tol = 1e-8;
  if (root.has("require")) {
    const View rq = root.table("require");
    rq.allow_keys({"conservation_tol"});
    tol = rq.num_or("conservation_tol", tol);
    if (!(tol > 0.0)) bad(rq.path() + ".conservation_tol", "must be positive");
  }

  const FlowTrajectory tr = integrate(H, x0, xi0, s_max, fo);
  const double defect = tr.conservation_defect();
  bool ok = defect <= tol;
  rep["flow"] = {{"steps", int(tr.samples.size()) - 1},
                 {"step", fo.step},
                 {"conservation_defect", defect},
                 {"conservation_tol", tol}};

  out.text("trajectory.csv", trajectory_csv(tr, H.convention()));
  {
    PlotSeries s;
    PlotOptions po;
    if (dim >= 2) {
      for (const auto& smp : tr.samples) {
        s.x.push_back(smp.x[0]);
        s.y.push_back(smp.x[1]);
      }
      po.x_label = variable_name(H.convention(), 0);
      po.y_label = variable_name(H.convention(), 1);
      po.title = "projected trajectory";
    } else {
      for (const auto& smp : tr.samples) {
        s.x.push_back(smp.x[0]);
        s.y.push_back(smp.xi[0]);
      }
      po.x_label = variable_name(H.convention(), 0);
      po.y_label = "xi";
      po.title = "phase portrait";
    }
    out.svg("trajectory.svg", {s}, po);
  }

  if (root.has("tangency")) {
    const View tv = root.table("tangency");
    tv.allow_keys({"psi", "base", "expect_class"});
    const ScalarField psi = parse_field(tv.child("psi"), dim, H.convention());
    const Eigen::VectorXd base =
        tv.has("base") ? to_vec(tv.nums("base", dim)) : x0;
    const TangencyReport tg = classify_tangency(tr, psi, base);
    rep["tangency"] = {{"c0", tg.c0},
                       {"c_dot0", tg.c_dot0},
                       {"c_ddot0", tg.c_ddot0},
                       {"class", to_string(tg.cls)}};
    if (tv.has("expect_class")) {
      const std::string want = tv.str("expect_class");
      const std::set<std::string> known{"transversal", "convex-tangent",
                                        "concave-tangent", "higher-order"};
      if (!known.count(want))
        bad(tv.path() + ".expect_class", "unknown class '" + want + "'");
      if (to_string(tg.cls) != want) ok = false;
      rep["tangency"]["expected"] = want;
    }
  }
  return ok ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// distance

std::string run_distance(const View& root, Out& out, json& rep, std::uint64_t,
                         int) {
  root.allow_keys({"kind", "expect", "title", "grid", "distance", "sup",
                   "influence", "require"});
  const GridDomain dom = parse_grid(root.table("grid"));
  const View dv = root.table("distance");
  dv.allow_keys({"source", "order"});
  const int order = int(dv.int_or("order", 2));
  if (order < 1 || order > 3) bad(dv.path() + ".order", "must be 1, 2 or 3");
  const auto source = set_mask(dom, dv.child("source"));

  const DistanceField df = distance_field(dom, source, order);
  double max_finite = 0.0;
  std::size_t finite_count = 0;
  for (std::size_t idx = 0; idx < df.value.size(); ++idx) {
    if (!dom.masked(idx) || !std::isfinite(df.value[idx])) continue;
    max_finite = std::max(max_finite, df.value[idx]);
    ++finite_count;
  }
  rep["distance"] = {{"order", order},
                     {"max_finite", max_finite},
                     {"finite_points", finite_count},
                     {"unreachable", df.unreachable}};

  GridPayload payload;
  payload.name = "distance";
  for (int a = 0; a < dom.dim(); ++a) {
    payload.dims.push_back(dom.counts()[a]);
    payload.lo.push_back(dom.lower()[a]);
    payload.hi.push_back(dom.upper()[a]);
  }
  payload.data = df.value;
  out.grid("distance.grid", payload);
  if (dom.dim() <= 2) out.text("distance.csv", grid_csv(payload));

  if (dom.dim() <= 2) {
    // Distance profile along the middle line of the box.
    PlotSeries s;
    const int j = dom.dim() == 2 ? dom.counts()[1] / 2 : 0;
    for (int i = 0; i < dom.counts()[0]; ++i) {
      const std::size_t idx = dom.index(i, j);
      s.x.push_back(dom.point(idx)[0]);
      s.y.push_back(df.value[idx]);
    }
    PlotOptions po;
    po.title = "distance to the source along the centerline";
    po.x_label = "x1";
    po.y_label = "distance";
    out.svg("distance.svg", {s}, po);
  }

  double sup = 0.0;
  bool have_sup = false;
  if (root.has("sup")) {
    const View sv = root.table("sup");
    sv.allow_keys({"from", "to"});
    sup = sup_distance(dom, set_mask(dom, sv.child("from")),
                       set_mask(dom, sv.child("to")), order);
    have_sup = true;
    rep["sup"] = jnum(sup);
  }

  if (root.has("influence")) {
    const View iv = root.table("influence");
    iv.allow_keys({"omega", "horizon", "t_samples"});
    const auto omega = set_mask(dom, iv.child("omega"));
    const double T = iv.num("horizon");
    if (!(T > 0.0)) bad(iv.path() + ".horizon", "must be positive");
    const auto ts = iv.nums("t_samples");
    if (ts.empty()) bad(iv.path() + ".t_samples", "needs at least one sample");
    const auto slices = region_of_dependence(dom, omega, T, ts, order);
    std::size_t active = 0;
    for (std::size_t idx = 0; idx < dom.size(); ++idx)
      if (dom.masked(idx)) ++active;
    json sj = json::array();
    for (std::size_t k = 0; k < slices.size(); ++k) {
      std::size_t inside = 0;
      for (std::size_t idx = 0; idx < dom.size(); ++idx)
        if (slices[k][idx]) ++inside;
      sj.push_back({{"t", ts[k]},
                    {"covered", inside},
                    {"fraction", active ? double(inside) / double(active) : 0.0}});
      GridPayload pk = payload;
      pk.name = "influence";
      pk.data.assign(slices[k].begin(), slices[k].end());
      char name[32];
      std::snprintf(name, sizeof name, "influence_%02zu.grid", k);
      out.grid(name, pk);
    }
    rep["influence"] = {{"horizon", T}, {"slices", sj}};
  }

  bool ok = true;
  if (root.has("require")) {
    const View rq = root.table("require");
    rq.allow_keys({"max_finite", "sup_max", "sup_min", "unreachable_max"});
    if (rq.has("max_finite")) ok &= max_finite <= rq.num("max_finite");
    if (rq.has("unreachable_max"))
      ok &= df.unreachable <= std::size_t(rq.integer("unreachable_max"));
    if (rq.has("sup_max") || rq.has("sup_min")) {
      if (!have_sup) bad(rq.path(), "sup bounds need a [sup] table");
      if (rq.has("sup_max")) ok &= sup <= rq.num("sup_max");
      if (rq.has("sup_min")) ok &= sup >= rq.num("sup_min");
    }
  }
  return ok ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// sweep

std::string run_sweep(const View& root, Out& out, json& rep, std::uint64_t, int) {
  root.allow_keys({"kind", "expect", "title", "family", "symbol", "grid"});
  const View fv = root.table("family");
  fv.allow_keys({"ell0", "t0", "alpha", "b", "delta", "spatial_dim"});
  const int sd = int(fv.int_or("spatial_dim", 2));
  const SweepFamily family =
      SweepFamily::make(fv.num_or("ell0", 1.0), fv.num_or("t0", 1.3),
                        fv.num_or("alpha", 1.2), fv.num_or("b", 0.1),
                        fv.num_or("delta", 0.2), sd);

  PrincipalSymbol p = [&]() {
    if (!root.has("symbol")) return normal_form_symbol(sd);
    const View sv = root.table("symbol");
    sv.allow_keys({"m_prime_upper"});
    const int dw = sd - 1;
    return normal_form_symbol(
        sd, parse_fields(sv, "m_prime_upper", dw * (dw + 1) / 2, sd,
                         VarConvention::spatial));
  }();

  SweepGrid grid;
  if (root.has("grid")) {
    const View gv = root.table("grid");
    gv.allow_keys({"eps_count", "nt", "nw", "nl"});
    grid.eps_count = int(gv.int_or("eps_count", grid.eps_count));
    grid.nt = int(gv.int_or("nt", grid.nt));
    grid.nw = int(gv.int_or("nw", grid.nw));
    grid.nl = int(gv.int_or("nl", grid.nl));
  }

  const SweepReport r = build_sweep(family, p, grid);
  rep["sweep"] = {
      {"min_margin", r.min_margin},
      {"eta_pred", r.eta_pred},
      {"hypothesis_ok", r.hypothesis_ok},
      {"noncharacteristic", r.noncharacteristic},
      {"slope_margin", r.slope_margin},
      {"max_margin_jump", r.max_margin_jump},
      {"eps_sensitivity", r.eps_sensitivity},
      {"worst",
       {{"eps", r.worst.eps},
        {"x", std::vector<double>(r.worst.x.data(), r.worst.x.data() + r.worst.x.size())},
        {"value", r.worst.value}}}};

  std::ostringstream csv;
  csv << "eps,margin\n";
  PlotSeries s;
  for (std::size_t i = 0; i < r.eps_grid.size(); ++i) {
    csv << format_exact(r.eps_grid[i]) << "," << format_exact(r.margins[i]) << "\n";
    s.x.push_back(r.eps_grid[i]);
    s.y.push_back(r.margins[i]);
  }
  out.text("margins.csv", csv.str());
  PlotOptions po;
  po.title = "noncharacteristic margin across the family";
  po.x_label = "eps";
  po.y_label = "min margin";
  out.svg("margins.svg", {s}, po);

  return r.min_margin > 0.0 ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// multiplier

std::string run_multiplier(const View& root, Out& out, json& rep, std::uint64_t,
                           int) {
  root.allow_keys({"kind", "expect", "title", "signal", "multiplier",
                   "commutation", "decay"});
  const View sg = root.table("signal");
  sg.allow_keys({"expr", "t_lo", "t_hi", "n"});
  const ScalarField f = parse_field(sg.child("expr"), 1, VarConvention::time_space);
  const double t_lo = sg.num("t_lo"), t_hi = sg.num("t_hi");
  if (!(t_lo < t_hi)) bad(sg.path(), "t_lo must be below t_hi");
  const int n = int(sg.integer("n"));
  if (n < 8 || n > (1 << 20)) bad(sg.path() + ".n", "must be in [8, 2^20]");
  Eigen::VectorXd pt(1);
  const TimeSignal u = TimeSignal::sample(
      [&](double t) {
        Eigen::VectorXd x(1);
        x[0] = t;
        return eval_value(f, x);
      },
      t_lo, t_hi, n);

  const View mv = root.table("multiplier");
  mv.allow_keys({"eps", "tau", "mode"});
  const double eps = mv.num("eps"), tau = mv.num("tau");
  if (!(eps > 0.0) || !(tau > 0.0)) bad(mv.path(), "eps and tau must be positive");
  const std::string ms = mv.str_or("mode", "spectral");
  if (ms != "spectral" && ms != "convolution")
    bad(mv.path() + ".mode", "must be 'spectral' or 'convolution'");
  const MultiplierMode mode =
      ms == "spectral" ? MultiplierMode::spectral : MultiplierMode::convolution;

  const MultiplierResult mr = apply_multiplier(u, eps, tau, mode);
  rep["multiplier"] = {{"eps", eps},
                       {"tau", tau},
                       {"mode", ms},
                       {"boundary_warning", mr.boundary_warning},
                       {"padding_factor", mr.padding_factor},
                       {"input_l2", u.l2()},
                       {"output_l2", mr.out.l2()}};

  {
    std::ostringstream csv;
    csv << "t,input,filtered\n";
    PlotSeries in, fo_;
    in.label = "input";
    fo_.label = "filtered";
    for (int i = 0; i < u.n(); ++i) {
      csv << format_exact(u.time(i)) << "," << format_exact(u.samples[i]) << ","
          << format_exact(mr.out.samples[i]) << "\n";
      in.x.push_back(u.time(i));
      in.y.push_back(u.samples[i]);
      fo_.x.push_back(u.time(i));
      fo_.y.push_back(mr.out.samples[i]);
    }
    out.text("signal.csv", csv.str());
    PlotOptions po;
    po.title = "low-pass multiplier";
    po.x_label = "t";
    po.y_label = "signal";
    out.svg("signal.svg", {in, fo_}, po);
  }

  bool ok = true;
  if (root.has("commutation")) {
    const View cv = root.table("commutation");
    cv.allow_keys({"tol"});
    const double tol = cv.num_or("tol", 1e-7);
    if (!(tol > 0.0)) bad(cv.path() + ".tol", "must be positive");
    const double resid = commutation_residual(u, eps, tau);
    const double resid2 = iterated_commutation_residual(u, eps, tau);
    rep["commutation"] = {{"residual", resid},
                          {"iterated_residual", resid2},
                          {"tol", tol}};
    ok &= resid <= tol;
  }

  if (root.has("decay")) {
    const View dv = root.table("decay");
    dv.allow_keys({"lambda_lo", "lambda_hi", "count", "rate_fraction", "window1",
                   "window2"});
    auto parse_window = [&](const char* key) {
      const View wv = dv.table(key);
      wv.allow_keys({"lo", "hi", "taper"});
      Window w;
      w.lo = wv.num("lo");
      w.hi = wv.num("hi");
      w.taper = wv.num_or("taper", 0.0);
      if (!(w.lo < w.hi)) bad(wv.path(), "lo must be below hi");
      if (w.taper < 0.0) bad(wv.path() + ".taper", "must be nonnegative");
      return w;
    };
    const Window w1 = parse_window("window1");
    const Window w2 = parse_window("window2");
    const double gap = w2.lo - w1.hi;
    if (!(gap > 0.0))
      bad(dv.path(), "window2 must start strictly after window1 ends");
    const double llo = dv.num("lambda_lo"), lhi = dv.num("lambda_hi");
    if (!(llo > 0.0) || !(lhi > llo)) bad(dv.path(), "need 0 < lambda_lo < lambda_hi");
    const int count = int(dv.int_or("count", 6));
    if (count < 2 || count > 64) bad(dv.path() + ".count", "must be in [2, 64]");
    const double frac = dv.num_or("rate_fraction", 0.9);
    if (!(frac > 0.0)) bad(dv.path() + ".rate_fraction", "must be positive");

    std::vector<double> lambdas;
    for (int i = 0; i < count; ++i)
      lambdas.push_back(llo * std::pow(lhi / llo, double(i) / double(count - 1)));
    const auto pts = decay_ratio(w1, w2, u, lambdas);

    std::vector<double> xs, ys;
    std::ostringstream csv;
    csv << "lambda,ratio\n";
    PlotSeries s;
    for (const auto& [lambda, ratio] : pts) {
      csv << format_exact(lambda) << "," << format_exact(ratio) << "\n";
      s.x.push_back(lambda);
      s.y.push_back(ratio);
      if (ratio > 0.0) {
        xs.push_back(lambda);
        ys.push_back(std::log(ratio));
      }
    }
    out.text("decay.csv", csv.str());
    PlotOptions po;
    po.title = "cross-window decay";
    po.x_label = "lambda";
    po.y_label = "ratio";
    po.log_y = true;
    out.svg("decay.svg", {s}, po);

    const double bound = gap * gap / 8.0;
    json dj = {{"gap", gap}, {"bound", bound}, {"rate_fraction", frac}};
    if (xs.size() >= 2) {
      const LineFit fit = fit_line(xs, ys);
      dj["rate"] = -fit.slope;
      dj["r2"] = fit.r2;
      ok &= -fit.slope >= frac * bound;
    } else {
      dj["rate"] = nullptr;
      ok = false;
    }
    rep["decay"] = dj;
  }
  return ok ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// simulate

GridPayload state_payload(const GridDomain& dom, const Eigen::VectorXd& v,
                          const std::string& name) {
  GridPayload p;
  p.name = name;
  for (int a = 0; a < dom.dim(); ++a) {
    p.dims.push_back(dom.counts()[a]);
    p.lo.push_back(dom.lower()[a]);
    p.hi.push_back(dom.upper()[a]);
  }
  p.data.assign(v.data(), v.data() + v.size());
  return p;
}

std::string run_simulate(const View& root, Out& out, json& rep, std::uint64_t,
                         int) {
  root.allow_keys({"kind", "expect", "title", "grid", "wave", "output", "require"});
  const GridDomain dom = parse_grid(root.table("grid"));
  const View wv = root.table("wave");
  wv.allow_keys({"u0", "u1", "q", "T", "cfl", "steps", "forcing"});

  const ScalarField u0f = parse_field(wv.child("u0"), dom.dim(), VarConvention::spatial);
  const ScalarField u1f = parse_field(wv.child("u1"), dom.dim(), VarConvention::spatial);
  const ScalarField qf =
      wv.has("q") ? parse_field(wv.child("q"), dom.dim(), VarConvention::spatial)
                  : nullptr;
  const ScalarField ff = wv.has("forcing")
                             ? parse_field(wv.child("forcing"), dom.dim() + 1,
                                           VarConvention::time_space)
                             : nullptr;

  const WaveOperator op = WaveOperator::make(dom, qf);
  WaveState st = make_wave_state(
      dom, [&](const Eigen::VectorXd& x) { return eval_value(u0f, x); },
      [&](const Eigen::VectorXd& x) { return eval_value(u1f, x); });

  const double T = wv.num("T");
  if (!(T > 0.0)) bad(wv.path() + ".T", "must be positive");
  int steps;
  if (wv.has("steps")) {
    if (wv.has("cfl")) bad(wv.path(), "give either steps or cfl, not both");
    steps = int(wv.integer("steps"));
    if (steps < 1) bad(wv.path() + ".steps", "must be positive");
  } else {
    const double cfl = wv.num_or("cfl", 0.45);
    if (!(cfl > 0.0) || cfl > 1.0) bad(wv.path() + ".cfl", "must lie in (0, 1]");
    const double speed = std::max(op.max_speed(), 1e-12);
    steps = std::max(1, int(std::ceil(T / (cfl * op.min_spacing() / speed))));
  }
  const double dt = T / steps;
  // Von Neumann limit of the cross-difference stencil on a d-dimensional box.
  const double cfl_cap = 1.0 / std::sqrt(double(dom.dim()));
  if (op.cfl(dt) > cfl_cap + 1e-12)
    bad(wv.path(), "time step violates the stability bound (needs cfl <= " +
                       format_exact(cfl_cap) + ")");
  if (steps > 200000) bad(wv.path(), "more than 200000 time steps requested");

  auto sample_forcing = [&](double t) {
    Eigen::VectorXd g(dom.size());
    Eigen::VectorXd x(dom.dim() + 1);
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      const Eigen::VectorXd xp = dom.point(idx);
      x[0] = t;
      for (int a = 0; a < dom.dim(); ++a) x[a + 1] = xp[a];
      g[idx] = eval_value(ff, x);
    }
    return g;
  };

  int snapshots = 0;
  if (root.has("output")) {
    const View ov = root.table("output");
    ov.allow_keys({"snapshots"});
    snapshots = int(ov.int_or("snapshots", 0));
    if (snapshots < 0 || snapshots > 64)
      bad(ov.path() + ".snapshots", "must be in [0, 64]");
  }
  std::set<int> snap_steps;
  for (int i = 1; i <= snapshots; ++i)
    snap_steps.insert(int(std::llround(double(i) * steps / double(snapshots + 1))));

  const double e0 = wave_energy(st, op, dt);
  double max_drift = 0.0, max_abs_u = st.u.cwiseAbs().maxCoeff();
  std::ostringstream csv;
  csv << "t,energy,drift\n";
  csv << format_exact(0.0) << "," << format_exact(e0) << "," << format_exact(0.0)
      << "\n";
  PlotSeries es;
  es.x.push_back(0.0);
  es.y.push_back(e0);

  Eigen::VectorXd f_now, f_next;
  if (ff) f_now = sample_forcing(0.0);
  int snap_id = 0;
  for (int k = 0; k < steps; ++k) {
    if (ff) f_next = sample_forcing(dt * (k + 1));
    st = step_leapfrog(st, dt, op, ff ? &f_now : nullptr, ff ? &f_next : nullptr);
    if (ff) std::swap(f_now, f_next);
    if (!st.u.allFinite() || !st.v.allFinite())
      throw Error(ErrorCode::numeric, "wave state became non-finite at step " +
                                          std::to_string(k + 1));
    const double e = wave_energy(st, op, dt);
    const double drift = std::abs(e - e0) / std::max(std::abs(e0), 1e-300);
    max_drift = std::max(max_drift, drift);
    max_abs_u = std::max(max_abs_u, st.u.cwiseAbs().maxCoeff());
    csv << format_exact(st.time) << "," << format_exact(e) << ","
        << format_exact(e - e0) << "\n";
    es.x.push_back(st.time);
    es.y.push_back(e);
    if (snap_steps.count(k + 1)) {
      char name[32];
      std::snprintf(name, sizeof name, "state_%04d.grid", ++snap_id);
      out.grid(name, state_payload(dom, st.u, "state"));
    }
  }

  out.text("energy.csv", csv.str());
  PlotOptions po;
  po.title = "discrete energy";
  po.x_label = "t";
  po.y_label = "energy";
  out.svg("energy.svg", {es}, po);
  out.grid("final_state.grid", state_payload(dom, st.u, "state"));
  out.grid("final_velocity.grid", state_payload(dom, st.v, "velocity"));

  rep["simulate"] = {{"steps", steps},
                     {"dt", dt},
                     {"cfl", op.cfl(dt)},
                     {"energy_initial", e0},
                     {"energy_drift", max_drift},
                     {"max_abs_u", max_abs_u},
                     {"forced", bool(ff)}};

  bool ok = true;
  if (root.has("require")) {
    const View rq = root.table("require");
    rq.allow_keys({"energy_drift_tol"});
    if (rq.has("energy_drift_tol")) {
      if (ff)
        bad(rq.path() + ".energy_drift_tol",
            "energy is only an invariant of the unforced evolution");
      ok &= max_drift <= rq.num("energy_drift_tol");
    }
  }
  return ok ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// carleman-ratio

std::string run_ratio(const View& root, Out& out, json& rep, std::uint64_t seed,
                      int) {
  root.allow_keys({"kind", "expect", "title", "grid", "weight", "operator",
                   "ratio"});
  const GridDomain dom = parse_grid(root.table("grid"));
  const View wt = root.table("weight");
  wt.allow_keys({"phi"});
  const ScalarField phi = parse_field(wt.child("phi"), dom.dim(), VarConvention::spatial);

  ScalarField c;
  std::vector<ScalarField> b;
  if (root.has("operator")) {
    const View ov = root.table("operator");
    ov.allow_keys({"c", "b"});
    if (ov.has("c")) c = parse_field(ov.child("c"), dom.dim(), VarConvention::spatial);
    if (ov.has("b"))
      b = parse_fields(ov, "b", dom.dim(), dom.dim(), VarConvention::spatial);
  }
  const LatticeOperator P = LatticeOperator::make(dom, c, b);

  const View rv = root.table("ratio");
  rv.allow_keys({"tau_lo", "tau_hi", "tau_count", "test_count"});
  double h = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dom.dim(); ++a) h = std::min(h, dom.spacing()[a]);
  const double tau_cap = 0.5 / h;
  const double tau_lo = rv.num_or("tau_lo", 5.0);
  double tau_hi = rv.num_or("tau_hi", 0.0);
  if (tau_hi == 0.0) tau_hi = tau_cap;
  if (!(tau_lo > 0.0) || !(tau_hi > tau_lo))
    bad(rv.path(), "need 0 < tau_lo < tau_hi");
  if (tau_hi > tau_cap + 1e-9)
    bad(rv.path() + ".tau_hi", "exceeds the weight resolution cap 0.5/h = " +
                                   format_exact(tau_cap));
  const int nt = int(rv.int_or("tau_count", 16));
  if (nt < 2 || nt > 256) bad(rv.path() + ".tau_count", "must be in [2, 256]");
  const int nf = int(rv.int_or("test_count", 16));
  if (nf < 1 || nf > 256) bad(rv.path() + ".test_count", "must be in [1, 256]");

  std::vector<double> tau_grid;
  for (int i = 0; i < nt; ++i)
    tau_grid.push_back(tau_lo * std::pow(tau_hi / tau_lo, double(i) / double(nt - 1)));

  const auto fns = random_bump_family(dom, nf, seed);
  const RatioCurve curve = carleman_ratio(P, phi, fns, tau_grid, "random-bumps");

  rep["ratio"] = {{"max", curve.max_ratio()},
                  {"median", curve.median_ratio()},
                  {"min", curve.min_ratio()},
                  {"growth_factor", curve.growth_factor()},
                  {"bounded", curve.bounded()},
                  {"skipped", curve.skipped},
                  {"h", curve.h},
                  {"tau_max_admissible", curve.tau_max_admissible},
                  {"test_family", curve.test_family},
                  {"test_count", nf}};

  out.text("ratio.csv", ratio_csv(curve));
  PlotSeries s;
  s.x = curve.tau_grid;
  s.y = curve.ratios;
  PlotOptions po;
  po.title = "weighted-inequality quotient";
  po.x_label = "tau";
  po.y_label = "worst ratio";
  po.log_x = true;
  po.log_y = true;
  out.svg("ratio.svg", {s}, po);

  return curve.bounded() ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// control

std::string run_control(const View& root, Out& out, json& rep, std::uint64_t,
                        int threads) {
  root.allow_keys({"kind", "expect", "title", "grid", "control", "target",
                   "require"});
  const GridDomain dom = parse_grid(root.table("grid"));
  const View cv = root.table("control");
  cv.allow_keys({"window_lo", "window_hi", "T", "cfl", "steps", "eps", "tikhonov",
                 "q"});

  const auto wlo = cv.nums("window_lo", dom.dim());
  const auto whi = cv.nums("window_hi", dom.dim());
  std::array<double, 3> lo3{0, 0, 0}, hi3{0, 0, 0};
  for (int a = 0; a < dom.dim(); ++a) {
    lo3[a] = wlo[a];
    hi3[a] = whi[a];
  }
  const Eigen::VectorXd chi = interval_cutoff(dom, lo3, hi3);

  const ScalarField qf =
      cv.has("q") ? parse_field(cv.child("q"), dom.dim(), VarConvention::spatial)
                  : nullptr;
  const double T = cv.num("T");
  if (!(T > 0.0)) bad(cv.path() + ".T", "must be positive");
  const WaveOperator op = WaveOperator::make(dom, qf);
  int steps;
  if (cv.has("steps")) {
    if (cv.has("cfl")) bad(cv.path(), "give either steps or cfl, not both");
    steps = int(cv.integer("steps"));
    if (steps < 2) bad(cv.path() + ".steps", "must be at least 2");
  } else {
    const double cfl = cv.num_or("cfl", 0.45);
    if (!(cfl > 0.0) || cfl > 0.95) bad(cv.path() + ".cfl", "must lie in (0, 0.95]");
    const double speed = std::max(op.max_speed(), 1e-12);
    steps = std::max(2, int(std::ceil(T / (cfl * op.min_spacing() / speed))));
  }

  const auto eps = cv.nums("eps");
  if (eps.empty()) bad(cv.path() + ".eps", "needs at least one value");
  for (double e : eps)
    if (!(e > 0.0) || !(e < 1.0))
      bad(cv.path() + ".eps", "precision demands must lie in (0, 1)");
  const double tik = cv.num_or("tikhonov", 0.0);
  if (tik < 0.0) bad(cv.path() + ".tikhonov", "must be nonnegative");

  const View tv = root.table("target");
  tv.allow_keys({"kind", "depth_cap", "state", "velocity"});
  const std::string tkind = tv.str("kind");
  Eigen::VectorXd ts, tvel;
  json tj = {{"kind", tkind}};
  if (tkind == "shadow") {
    const double cap = tv.num_or("depth_cap", 12.0);
    if (!(cap > 1.0)) bad(tv.path() + ".depth_cap", "must exceed 1");
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dom.size());
    const ControlProblem seedp =
        ControlProblem::make(dom, chi, T, steps, zero, zero, eps.front(), tik, qf);
    const FinalPair pair = graded_shadow_target(seedp, eps, cap);
    ts = pair.state;
    tvel = pair.velocity;
    tj["depth_cap"] = cap;
  } else if (tkind == "expr") {
    const ScalarField sf = parse_field(tv.child("state"), dom.dim(),
                                       VarConvention::spatial);
    const ScalarField vf = parse_field(tv.child("velocity"), dom.dim(),
                                       VarConvention::spatial);
    ts.resize(dom.size());
    tvel.resize(dom.size());
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      const bool in = op.interior(idx);
      const Eigen::VectorXd x = dom.point(idx);
      ts[idx] = in ? eval_value(sf, x) : 0.0;
      tvel[idx] = in ? eval_value(vf, x) : 0.0;
    }
  } else {
    bad(tv.path() + ".kind", "must be 'shadow' or 'expr'");
  }
  rep["target"] = tj;

  const ControlProblem p =
      ControlProblem::make(dom, chi, T, steps, ts, tvel, eps.front(), tik, qf);

  // Geodesic reach of the window: every active point must be within T/2 for
  // the classical observation argument to apply.
  std::vector<std::uint8_t> everywhere(dom.size(), 0);
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    if (dom.masked(idx)) everywhere[idx] = 1;
  const double L = sup_distance(dom, everywhere, p.omega());
  rep["geometry"] = {{"window_distance", jnum(L)},
                     {"horizon", T},
                     {"horizon_minus_2L", jnum(T - 2.0 * L)}};

  const auto points = cost_curve(p, eps, threads);
  out.text("cost.csv", cost_csv(points));

  json pj = json::array();
  std::vector<double> xs, ys;
  PlotSeries s;
  for (const auto& cp : points) {
    pj.push_back({{"eps", cp.eps},
                  {"cost", cp.cost},
                  {"achieved_error", cp.achieved_error},
                  {"iterations", cp.iterations},
                  {"alpha", cp.alpha}});
    s.x.push_back(1.0 / cp.eps);
    s.y.push_back(cp.cost);
    if (cp.cost > 0.0) {
      xs.push_back(1.0 / cp.eps);
      ys.push_back(std::log(cp.cost));
    }
  }
  rep["points"] = pj;
  PlotOptions po;
  po.title = "steering cost against precision";
  po.x_label = "1 / eps";
  po.y_label = "cost";
  po.log_y = true;
  out.svg("cost.svg", {s}, po);

  LineFit fit;
  const bool have_fit = xs.size() >= 2;
  if (have_fit) {
    fit = fit_line(xs, ys);
    rep["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
  }

  bool ok = true;
  if (root.has("require")) {
    const View rq = root.table("require");
    rq.allow_keys({"r2_min", "slope_positive", "max_over_median"});
    if (rq.has("r2_min")) ok &= have_fit && fit.r2 >= rq.num("r2_min");
    if (rq.flag_or("slope_positive", false)) ok &= have_fit && fit.slope > 0.0;
    if (rq.has("max_over_median")) {
      std::vector<double> costs;
      for (const auto& cp : points) costs.push_back(cp.cost);
      std::sort(costs.begin(), costs.end());
      const double median = costs[costs.size() / 2];
      const double top = costs.back();
      ok &= top <= rq.num("max_over_median") * std::max(median, 1e-300);
    }
  }
  return ok ? "pass" : "fail";
}

// ---------------------------------------------------------------------------

using Runner = std::string (*)(const View&, Out&, json&, std::uint64_t, int);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"check-surface", run_check_surface},
      {"convexify", run_convexify},
      {"flow", run_flow},
      {"distance", run_distance},
      {"sweep", run_sweep},
      {"multiplier", run_multiplier},
      {"simulate", run_simulate},
      {"carleman-ratio", run_ratio},
      {"control", run_control},
  };
  return table;
}

}  // namespace

ScenarioOutcome run_scenario(const std::string& kind, const fs::path& config,
                             const fs::path& out_dir, std::uint64_t seed,
                             int threads) {
  ScenarioOutcome oc;
  json rep = json::object();
  rep["seed"] = seed;
  Out out;
  out.dir = out_dir;

  std::string expect;
  try {
    if (threads < 1 || threads > 512)
      throw Error(ErrorCode::config, "config: threads must lie in [1, 512]");
    set_max_threads(threads);

    TomlValue doc;
    try {
      doc = parse_toml_file(config);
    } catch (const Error& e) {
      // An unreadable config is an invocation problem, same bucket as a
      // malformed one.
      if (e.code() == ErrorCode::io) throw Error(ErrorCode::config, e.what());
      throw;
    }
    const View root(doc, "");

    const std::string declared = root.str("kind");
    if (!runners().count(declared))
      bad("kind", "unknown scenario kind '" + declared + "'");
    if (!kind.empty() && kind != declared)
      bad("kind", "config declares '" + declared + "' but the command asked for '" +
                      kind + "'");
    rep["kind"] = declared;
    if (root.has("title")) rep["title"] = root.str("title");
    if (root.has("expect")) {
      expect = root.str("expect");
      if (expect != "pass" && expect != "fail" && expect != "vacuous")
        bad("expect", "must be 'pass', 'fail' or 'vacuous'");
      rep["expect"] = expect;
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
      throw Error(ErrorCode::io,
                  "cannot create output directory: " + out_dir.string());

    oc.verdict = runners().at(declared)(root, out, rep, seed, threads);
    rep["verdict"] = oc.verdict;
    if (!expect.empty()) {
      const bool matched = oc.verdict == expect;
      rep["expect_matched"] = matched;
      if (!matched) {
        oc.exit_code = 1;
        oc.error = "expected verdict '" + expect + "', got '" + oc.verdict + "'";
      }
    }
  } catch (const Error& e) {
    oc.exit_code =
        (e.code() == ErrorCode::parse || e.code() == ErrorCode::config) ? 2 : 3;
    oc.error = e.what();
    oc.verdict.clear();
  } catch (const std::exception& e) {
    oc.exit_code = 3;
    oc.error = e.what();
    oc.verdict.clear();
  }

  if (oc.exit_code >= 2) rep["error"] = {{"exit", oc.exit_code}, {"message", oc.error}};
  rep["artifacts"] = out.artifacts;

  try {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    write_json(out_dir / "report.json", rep);
  } catch (const std::exception& e) {
    if (oc.exit_code == 0) {
      oc.exit_code = 3;
      oc.error = e.what();
    }
  }
  oc.report = std::move(rep);
  return oc;
}

}  // namespace carleman
