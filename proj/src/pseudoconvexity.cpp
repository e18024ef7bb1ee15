#include "carleman/pseudoconvexity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "carleman/util.hpp"

namespace carleman {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::vacuous: return "vacuous";
  }
  return "?";
}

namespace {

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Plain Nelder-Mead on R^n; deterministic for a fixed start.
Eigen::VectorXd nelder_mead(const Objective& f, const Eigen::VectorXd& start,
                            double step, int iters) {
  const int n = int(start.size());
  struct V {
    Eigen::VectorXd x;
    double f;
  };
  std::vector<V> s;
  s.reserve(n + 1);
  s.push_back({start, f(start)});
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = start;
    x[i] += step;
    s.push_back({x, f(x)});
  }
  auto by_value = [](const V& a, const V& b) { return a.f < b.f; };
  std::stable_sort(s.begin(), s.end(), by_value);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) c += s[i].x;
    c /= double(n);
    const Eigen::VectorXd xr = c + (c - s[n].x);
    const double fr = f(xr);
    if (fr < s[0].f) {
      const Eigen::VectorXd xe = c + 2.0 * (c - s[n].x);
      const double fe = f(xe);
      s[n] = (fe < fr) ? V{xe, fe} : V{xr, fr};
    } else if (fr < s[n - 1].f) {
      s[n] = {xr, fr};
    } else {
      const Eigen::VectorXd xc = c + 0.5 * (s[n].x - c);
      const double fc = f(xc);
      if (fc < s[n].f) {
        s[n] = {xc, fc};
      } else {
        for (int i = 1; i <= n; ++i) {
          s[i].x = s[0].x + 0.5 * (s[i].x - s[0].x);
          s[i].f = f(s[i].x);
        }
      }
    }
    std::stable_sort(s.begin(), s.end(), by_value);
  }
  return s[0].x;
}

// Scan geometry: which sphere the lattice lives on and how a lattice vector
// becomes a covector/tau pair.  In xit0 mode the time component of xi is
// pinned to zero and the sphere loses one dimension.
struct ScanSpace {
  int dim = 0;
  bool xit0 = false;

  int sphere_dim(bool complex_cond) const {
    const int nxi = xit0 ? dim - 1 : dim;
    return complex_cond ? nxi + 1 : nxi;
  }

  void lift(const Eigen::VectorXd& v, bool complex_cond, Eigen::VectorXd& xi,
            double& tau) const {
    const int nxi = xit0 ? dim - 1 : dim;
    xi = Eigen::VectorXd::Zero(dim);
    if (xit0)
      xi.tail(nxi) = v.head(nxi);
    else
      xi = v.head(nxi);
    tau = complex_cond ? std::abs(v[v.size() - 1]) : 0.0;
  }
};

struct CondSpec {
  std::string name;
  bool complex_cond = false;
  // (positivity quantity, max constraint violation) at a lifted point.
  std::function<std::pair<double, double>(const Eigen::VectorXd&, double)> eval;
};

std::string delta_key(double d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.0e", d);
  return buf;
}

ConditionReport scan_condition(const CondSpec& spec, const ScanSpace& space,
                               const CheckOptions& opt) {
  ConditionReport rep;
  rep.name = spec.name;

  const int m = space.sphere_dim(spec.complex_cond);
  const auto lattice = sphere_lattice(m, opt.lattice_points, spec.complex_cond);
  const std::size_t N = lattice.size();
  rep.samples = long(N);

  std::vector<double> qv(N), cv(N);
  parallel_chunks(N, [&](std::size_t b, std::size_t e) {
    Eigen::VectorXd xi;
    double tau;
    for (std::size_t i = b; i < e; ++i) {
      space.lift(lattice[i], spec.complex_cond, xi, tau);
      const auto [q, c] = spec.eval(xi, tau);
      qv[i] = q;
      cv[i] = c;
    }
  });

  // Lattice margins for the whole threshold grid (sensitivity bookkeeping).
  std::vector<double> deltas = opt.delta_grid;
  if (std::find(deltas.begin(), deltas.end(), opt.delta_feas) == deltas.end())
    deltas.push_back(opt.delta_feas);
  for (double d : deltas) {
    double mn = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < N; ++i) {
      if (cv[i] <= d) {
        any = true;
        mn = std::min(mn, qv[i]);
      }
    }
    rep.delta_margins[delta_key(d)] =
        any ? mn : std::numeric_limits<double>::quiet_NaN();
  }

  const double delta = opt.delta_feas;
  rep.min_violation = *std::min_element(cv.begin(), cv.end());

  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;

  auto lifted_eval = [&](const Eigen::VectorXd& u) -> std::pair<double, double> {
    const double nrm = u.norm();
    if (!(nrm > 1e-12)) return {1e30, 1e30};
    Eigen::VectorXd xi;
    double tau;
    space.lift((u / nrm).eval(), spec.complex_cond, xi, tau);
    return spec.eval(xi, tau);
  };

  double margin = std::numeric_limits<double>::infinity();
  Eigen::VectorXd arg_u;
  bool have_margin = false;

  auto consider = [&](const Eigen::VectorXd& u) {
    const auto [q, c] = lifted_eval(u);
    if (c <= delta * (1.0 + 1e-9) && q < margin) {
      margin = q;
      arg_u = u / u.norm();
      have_margin = true;
    }
  };

  std::vector<std::size_t> feas;
  for (std::size_t i = 0; i < N; ++i)
    if (cv[i] <= delta) feas.push_back(i);
  rep.feasible = long(feas.size());

  if (!feas.empty()) {
    for (std::size_t i : feas) {
      if (qv[i] < margin) {
        margin = qv[i];
        arg_u = lattice[i];
        have_margin = true;
      }
    }
    // Polish the worst candidates; the objective is the quantity plus an
    // exact penalty for leaving the thickened constraint set, evaluated on
    // the normalized vector so the scan stays on the sphere.
    std::stable_sort(feas.begin(), feas.end(),
                     [&](std::size_t a, std::size_t b) { return qv[a] < qv[b]; });
    const int starts = std::min<int>(opt.polish_starts, int(feas.size()));
    Objective pen = [&](const Eigen::VectorXd& u) {
      const auto [q, c] = lifted_eval(u);
      return q + 1e6 * std::max(0.0, c - delta);
    };
    for (int k = 0; k < starts; ++k) {
      const Eigen::VectorXd res =
          nelder_mead(pen, lattice[feas[k]], 0.05, opt.polish_iters);
      consider(res);
    }
  } else {
    // No feasible lattice point: probe whether the thickened set is truly
    // empty by driving the violation down from the closest candidates.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cv[a] < cv[b]; });
    Objective viol = [&](const Eigen::VectorXd& u) { return lifted_eval(u).second; };
    const int starts = std::min<int>(opt.polish_starts, int(order.size()));
    for (int k = 0; k < starts; ++k) {
      const Eigen::VectorXd res =
          nelder_mead(viol, lattice[order[k]], 0.05, opt.polish_iters);
      const auto [q, c] = lifted_eval(res);
      rep.min_violation = std::min(rep.min_violation, c);
      if (c <= delta) consider(res);
    }
  }

  if (!have_margin) {
    rep.verdict = Verdict::vacuous;
    return rep;
  }
  rep.margin = margin;
  Witness w;
  Eigen::VectorXd xi;
  double tau;
  space.lift(arg_u, spec.complex_cond, xi, tau);
  w.xi = xi;
  w.tau = tau;
  w.value = margin;
  w.condition = spec.name;
  rep.witness = w;
  rep.verdict = (margin > 0.0) ? Verdict::pass : Verdict::fail;
  return rep;
}

Verdict verdict_from_margin(double m) {
  if (std::isnan(m)) return Verdict::vacuous;
  return m > 0.0 ? Verdict::pass : Verdict::fail;
}

CheckReport merge_conditions(std::vector<ConditionReport> conds,
                             const CheckOptions& opt) {
  CheckReport rep;
  bool any_fail = false, all_vacuous = true;
  for (const auto& c : conds) {
    if (c.verdict == Verdict::fail) any_fail = true;
    if (c.verdict != Verdict::vacuous) all_vacuous = false;
  }
  rep.verdict = any_fail ? Verdict::fail
                         : (all_vacuous ? Verdict::vacuous : Verdict::pass);
  for (const auto& c : conds) {
    if (c.margin && (!rep.margin || *c.margin < *rep.margin)) {
      rep.margin = c.margin;
      rep.witness = c.witness;
    }
    if (c.verdict == Verdict::vacuous)
      rep.notes.push_back(c.name + " condition vacuous (min violation " +
                          std::to_string(c.min_violation) + ")");
    // Does the verdict at other thresholds differ from the verdict at the
    // working threshold?
    const Verdict base = verdict_from_margin(
        c.delta_margins.count(delta_key(opt.delta_feas))
            ? c.delta_margins.at(delta_key(opt.delta_feas))
            : std::numeric_limits<double>::quiet_NaN());
    for (const auto& [k, v] : c.delta_margins) {
      if (verdict_from_margin(v) != base) rep.delta_sensitive = true;
      (void)k;
    }
  }
  if (rep.delta_sensitive)
    rep.notes.push_back("verdict is sensitive to the feasibility threshold");
  rep.constants["delta_feas"] = opt.delta_feas;
  rep.conditions = std::move(conds);
  return rep;
}

void validate_inputs(const PrincipalSymbol& p, const Eigen::VectorXd& x0,
                     const CheckOptions& opt) {
  if (int(x0.size()) != p.dim())
    throw Error(ErrorCode::dimension, "check: base point has wrong dimension");
  if (opt.mode == CheckMode::xit0 && !p.wave_type())
    throw Error(ErrorCode::config, "xit0 mode requires a wave-type symbol");
}

}  // namespace

bool check_noncharacteristic(const PrincipalSymbol& p, const ScalarField& psi,
                             const Eigen::VectorXd& x0, double tol, double* density) {
  const WeightPoint w = weight_at(psi, x0);
  const double g2 = w.grad.squaredNorm();
  if (g2 < 1e-24)
    throw Error(ErrorCode::domain, "weight has vanishing differential at the base point");
  const double val = std::abs(eval_p2(p.at(x0), w.grad)) / g2;
  if (density) *density = val;
  return val > tol;
}

CheckReport check_surface_pseudoconvex(const PrincipalSymbol& p, const ScalarField& psi,
                                       const Eigen::VectorXd& x0,
                                       const CheckOptions& opt) {
  validate_inputs(p, x0, opt);
  const auto pt = p.at(x0);
  const WeightPoint w = weight_at(psi, x0);
  if (w.grad.norm() < 1e-12)
    throw Error(ErrorCode::domain, "surface check: dpsi(x0) vanishes");

  ScanSpace space{p.dim(), opt.mode == CheckMode::xit0};

  CondSpec real;
  real.name = "real";
  real.complex_cond = false;
  real.eval = [&pt, &w](const Eigen::VectorXd& xi, double) {
    const auto s = bracket_suite(pt, w, xi, 0.0);
    return std::make_pair(s.b2, std::max(std::abs(s.p2), std::abs(s.b1)));
  };

  CondSpec cplx;
  cplx.name = "complex";
  cplx.complex_cond = true;
  cplx.eval = [&pt, &w](const Eigen::VectorXd& xi, double tau) {
    const auto s = bracket_suite(pt, w, xi, tau);
    const double pmod = std::hypot(s.p_psi.re, s.p_psi.im);
    return std::make_pair(s.c_psi, std::max(pmod, std::abs(s.b_psi_psi)));
  };

  std::vector<ConditionReport> conds;
  conds.push_back(scan_condition(real, space, opt));
  conds.push_back(scan_condition(cplx, space, opt));

  CheckReport rep = merge_conditions(std::move(conds), opt);

  double density = 0.0;
  const bool nonchar =
      check_noncharacteristic(p, psi, x0, opt.noncharacteristic_tol, &density);
  rep.constants["noncharacteristic_density"] = density;
  if (!nonchar) rep.notes.push_back("surface is characteristic at the base point");

  // Strict failure of the real condition at a noncharacteristic point is the
  // classical instability profile: p = {p, psi} = 0 with {p, {p, psi}} < 0.
  if (nonchar && rep.conditions[0].verdict == Verdict::fail &&
      rep.conditions[0].margin && *rep.conditions[0].margin < 0.0)
    rep.alinhac_witness = true;

  return rep;
}

CheckReport check_function_pseudoconvex(const PrincipalSymbol& p, const ScalarField& phi,
                                        const Eigen::VectorXd& x0,
                                        const CheckOptions& opt) {
  validate_inputs(p, x0, opt);
  const auto pt = p.at(x0);
  const WeightPoint w = weight_at(phi, x0);

  ScanSpace space{p.dim(), opt.mode == CheckMode::xit0};

  CondSpec real;
  real.name = "real";
  real.complex_cond = false;
  real.eval = [&pt, &w](const Eigen::VectorXd& xi, double) {
    const auto s = bracket_suite(pt, w, xi, 0.0);
    return std::make_pair(s.b2, std::abs(s.p2));
  };

  CondSpec cplx;
  cplx.name = "complex";
  cplx.complex_cond = true;
  cplx.eval = [&pt, &w](const Eigen::VectorXd& xi, double tau) {
    const auto s = bracket_suite(pt, w, xi, tau);
    return std::make_pair(s.c_psi, std::hypot(s.p_psi.re, s.p_psi.im));
  };

  std::vector<ConditionReport> conds;
  conds.push_back(scan_condition(real, space, opt));
  conds.push_back(scan_condition(cplx, space, opt));
  return merge_conditions(std::move(conds), opt);
}

SubellipticityConstants subellipticity_constants(const PrincipalSymbol& p,
                                                 const ScalarField& phi,
                                                 const Eigen::VectorXd& x0,
                                                 const CheckOptions& opt) {
  validate_inputs(p, x0, opt);
  const auto pt = p.at(x0);
  const WeightPoint w = weight_at(phi, x0);
  const bool with_xit = (opt.mode == CheckMode::xit0);

  // One lattice over the full (xi, tau) half-sphere; the xit0 variant keeps
  // the full sphere but compensates with a +xi_t^2 term.
  const auto lattice = sphere_lattice(p.dim() + 1, opt.lattice_points, true);
  const std::size_t N = lattice.size();
  std::vector<double> fv(N), gv(N);
  parallel_chunks(N, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Eigen::VectorXd xi = lattice[i].head(p.dim());
      const double tau = std::abs(lattice[i][p.dim()]);
      const auto s = bracket_suite(pt, w, xi, tau);
      double f = s.p_psi.re * s.p_psi.re + s.p_psi.im * s.p_psi.im;
      if (with_xit) f += xi[0] * xi[0];
      fv[i] = f;
      gv[i] = 0.5 * s.c_psi;
    }
  });

  auto value_at = [&](double C1, const Eigen::VectorXd& u) {
    const double nrm = u.norm();
    if (!(nrm > 1e-12)) return 1e30;
    const Eigen::VectorXd v = u / nrm;
    const Eigen::VectorXd xi = v.head(p.dim());
    const double tau = std::abs(v[p.dim()]);
    const auto s = bracket_suite(pt, w, xi, tau);
    double f = s.p_psi.re * s.p_psi.re + s.p_psi.im * s.p_psi.im;
    if (with_xit) f += xi[0] * xi[0];
    return C1 * f + 0.5 * s.c_psi;
  };

  SubellipticityConstants out;
  std::vector<std::size_t> order(N);
  for (double c1 = 1.0; c1 <= double(1 << 20); c1 *= 2.0) {
    double mn = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double v = c1 * fv[i] + gv[i];
      if (v < mn) {
        mn = v;
        arg = i;
      }
    }
    if (mn <= 0.0) continue;
    // Polish the worst candidates before certifying.
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return c1 * fv[a] + gv[a] < c1 * fv[b] + gv[b];
    });
    Objective obj = [&](const Eigen::VectorXd& u) { return value_at(c1, u); };
    double certified = mn;
    Eigen::VectorXd arg_u = lattice[arg];
    const int starts = std::min<int>(opt.polish_starts, int(N));
    for (int k = 0; k < starts; ++k) {
      const Eigen::VectorXd res = nelder_mead(obj, lattice[order[k]], 0.05, opt.polish_iters);
      const double v = value_at(c1, res);
      if (v < certified) {
        certified = v;
        arg_u = res / res.norm();
      }
    }
    if (certified <= 0.0) continue;
    out.C1 = c1;
    out.C2 = certified;
    out.verdict = Verdict::pass;
    Witness wit;
    wit.xi = arg_u.head(p.dim());
    wit.tau = std::abs(arg_u[p.dim()]);
    wit.value = certified;
    wit.condition = "subellipticity";
    out.witness = wit;
    return out;
  }
  out.verdict = Verdict::fail;
  return out;
}

ConvexifyResult convexify_analytic(const PrincipalSymbol& p, const ScalarField& psi,
                                   const Eigen::VectorXd& x0, std::uint64_t seed,
                                   const CheckOptions& opt) {
  CheckReport surface = check_surface_pseudoconvex(p, psi, x0, opt);
  if (surface.verdict == Verdict::fail)
    throw Error(ErrorCode::domain,
                "convexify_analytic: the surface is not pseudoconvex at the base point");

  const double psi0 = eval_value(psi, x0);
  ConvexifyResult out;
  for (double lambda = 1.0; lambda <= double(1 << 20); lambda *= 2.0) {
    // Subtracting 1 keeps the brackets unchanged (they only see derivatives)
    // while pinning the zero level set: {w <= 0} = {psi <= psi(x0)}.
    ScalarField w = make_sub(make_exp(make_mul(make_constant(lambda),
                                               make_sub(psi, make_constant(psi0)))),
                             make_constant(1.0));
    CheckReport rep = check_function_pseudoconvex(p, w, x0, opt);
    if (rep.verdict != Verdict::pass) continue;
    out.lambda0 = lambda;
    out.weight = w;

    // Residual of the exponentiation identity on random unit (xi, tau).
    const auto pt = p.at(x0);
    const WeightPoint wpsi = weight_at(psi, x0);
    const WeightPoint wphi = weight_at(w, x0);
    Rng rng(seed);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      Eigen::VectorXd v = rng.unit_vector(p.dim() + 1);
      const Eigen::VectorXd xi = v.head(p.dim());
      const double tau = std::abs(v[p.dim()]);
      const auto sphi = bracket_suite(pt, wphi, xi, tau);
      const auto spsi = bracket_suite(pt, wpsi, xi, lambda * tau);
      const double lhs = sphi.c_psi;
      const double rhs = lambda * spsi.c_psi +
                         2.0 * lambda * lambda * std::norm(spsi.b_psi_psi);
      const double rel = std::abs(lhs - rhs) /
                         std::max({std::abs(lhs), std::abs(rhs), 1.0});
      worst = std::max(worst, rel);
    }
    out.identity_residual = worst;
    rep.constants["lambda0"] = lambda;
    rep.constants["identity_residual"] = worst;
    out.report = std::move(rep);
    return out;
  }
  throw Error(ErrorCode::schedule,
              "convexify_analytic: lambda schedule exhausted without a passing weight");
}

GeometricResult convexify_geometric(const PrincipalSymbol& p, const ScalarField& phi,
                                    const Eigen::VectorXd& x0, GeometricVariant variant,
                                    const CheckOptions& opt) {
  validate_inputs(p, x0, opt);
  const int n = p.dim();

  auto quad_dist = [&](double coef) {
    // coef * |x - x0|^2 as an expression tree.
    ExprPtr acc = make_constant(0.0);
    for (int i = 0; i < n; ++i) {
      acc = make_add(acc, make_pow(make_sub(make_variable(i), make_constant(x0[i])), 2));
    }
    return make_mul(make_constant(coef), acc);
  };

  if (variant == GeometricVariant::shift) {
    for (double eps = 1.0; eps >= std::ldexp(1.0, -40); eps *= 0.5) {
      ScalarField w = make_sub(phi, quad_dist(eps));
      CheckReport rep = check_function_pseudoconvex(p, w, x0, opt);
      if (rep.verdict != Verdict::pass) continue;
      GeometricResult out;
      out.eps = eps;
      out.weight = w;
      rep.constants["eps_geo"] = eps;
      out.report = std::move(rep);
      return out;
    }
    throw Error(ErrorCode::schedule,
                "convexify_geometric: shift schedule exhausted without a passing weight");
  }

  // Quadratic variant: Taylor polynomial at x0 minus delta |x-x0|^2, with a
  // certified radius from a sampled third-order remainder bound.
  const Jet2 jet = eval_jet2(phi, x0);
  if (!jet.finite())
    throw Error(ErrorCode::numeric, "convexify_geometric: non-finite weight jet at x0");

  auto taylor = [&](double delta) {
    ExprPtr acc = make_constant(jet.value);
    for (int i = 0; i < n; ++i) {
      const double gi = (i < jet.dim()) ? jet.grad[i] : 0.0;
      acc = make_add(acc, make_mul(make_constant(gi),
                                   make_sub(make_variable(i), make_constant(x0[i]))));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double hij = (i < jet.dim() && j < jet.dim()) ? jet.hess(i, j) : 0.0;
        if (hij == 0.0) continue;
        acc = make_add(acc,
                       make_mul(make_constant(0.5 * hij),
                                make_mul(make_sub(make_variable(i), make_constant(x0[i])),
                                         make_sub(make_variable(j), make_constant(x0[j])))));
      }
    }
    return make_sub(acc, quad_dist(delta));
  };

  // Third-order remainder constant: C3 = max |phi - T2 phi| / r^3 over a
  // sampled shell family.
  const auto dirs = sphere_lattice(n, 128, false);
  ScalarField t2 = taylor(0.0);
  double C3 = 1e-6;
  for (double r : {0.025, 0.05, 0.1, 0.2, 0.4}) {
    for (const auto& d : dirs) {
      const Eigen::VectorXd x = x0 + r * d;
      const double rem = std::abs(eval_value(phi, x) - eval_value(t2, x));
      C3 = std::max(C3, rem / (r * r * r));
    }
  }

  const auto ring_dirs = sphere_lattice(n, 512, false);
  for (double delta = 1.0; delta >= std::ldexp(1.0, -20); delta *= 0.5) {
    ScalarField w = taylor(delta);
    CheckReport rep = check_function_pseudoconvex(p, w, x0, opt);
    if (rep.verdict != Verdict::pass) continue;

    const double R0 = std::min(1.0, 0.9 * delta / (8.0 * C3));
    const double eta = delta * R0 * R0 / 8.0;
    // Certify w <= -delta R^2 / 8 on {phi <= 0} within the ring R/2..R.
    double slack = -std::numeric_limits<double>::infinity();
    long ring_pts = 0;
    for (int kr = 0; kr < 8; ++kr) {
      const double r = R0 * (0.5 + 0.5 * (kr + 0.5) / 8.0);
      for (const auto& d : ring_dirs) {
        const Eigen::VectorXd x = x0 + r * d;
        if (eval_value(phi, x) > 0.0) continue;
        ++ring_pts;
        slack = std::max(slack, eval_value(w, x) + delta * R0 * R0 / 8.0);
      }
    }
    if (ring_pts > 0 && slack > 1e-12) continue;  // ring bound failed; shrink delta

    GeometricResult out;
    out.eps = delta;
    out.weight = w;
    out.eta = eta;
    out.R0 = R0;
    out.ring_slack = (ring_pts > 0) ? slack : 0.0;
    rep.constants["eps_geo"] = delta;
    rep.constants["eta"] = eta;
    rep.constants["R0"] = R0;
    if (ring_pts == 0)
      rep.notes.push_back("ring certification vacuous: {phi <= 0} misses the shell");
    out.report = std::move(rep);
    return out;
  }
  throw Error(ErrorCode::schedule,
              "convexify_geometric: delta schedule exhausted without a certified weight");
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = carleman::to_string(verdict);
  if (margin) j["margin"] = *margin;
  if (witness) {
    nlohmann::json w;
    w["xi"] = std::vector<double>(witness->xi.data(), witness->xi.data() + witness->xi.size());
    w["tau"] = witness->tau;
    w["value"] = witness->value;
    w["condition"] = witness->condition;
    j["witness"] = w;
  }
  j["constants"] = constants;
  j["delta_sensitive"] = delta_sensitive;
  j["alinhac_witness"] = alinhac_witness;
  j["notes"] = notes;
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : conditions) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["verdict"] = carleman::to_string(c.verdict);
    if (c.margin) cj["margin"] = *c.margin;
    cj["feasible"] = c.feasible;
    cj["samples"] = c.samples;
    cj["min_violation"] = c.min_violation;
    nlohmann::json dm;
    for (const auto& [k, v] : c.delta_margins) {
      if (std::isnan(v))
        dm[k] = nullptr;
      else
        dm[k] = v;
    }
    cj["delta_margins"] = dm;
    if (c.witness) {
      nlohmann::json w;
      w["xi"] = std::vector<double>(c.witness->xi.data(),
                                    c.witness->xi.data() + c.witness->xi.size());
      w["tau"] = c.witness->tau;
      w["value"] = c.witness->value;
      cj["witness"] = w;
    }
    conds.push_back(cj);
  }
  j["conditions"] = conds;
  return j;
}

}  // namespace carleman
