#include "carleman/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "carleman/util.hpp"

namespace carleman {

namespace {

// Per-axis linear index step.
std::array<std::size_t, 3> strides(const GridDomain& dom) {
  const auto& n = dom.counts();
  return {std::size_t(n[1]) * n[2], std::size_t(n[2]), 1};
}

bool axis_active(const GridDomain& dom, int a) {
  return a < dom.dim() && dom.counts()[a] > 1;
}

}  // namespace

LatticeOperator LatticeOperator::make(const GridDomain& dom, const ScalarField& c,
                                      const std::vector<ScalarField>& b) {
  if (!b.empty() && int(b.size()) != dom.dim())
    throw Error(ErrorCode::dimension, "drift needs one component per axis");
  LatticeOperator op(WaveOperator::make(dom, c));
  for (int a = 0; a < int(b.size()); ++a) {
    if (!b[a]) continue;
    Eigen::VectorXd vals = Eigen::VectorXd::Zero(dom.size());
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      if (!op.second_.interior(idx)) continue;
      vals[idx] = eval_value(b[a], dom.point(idx));
      if (!std::isfinite(vals[idx]))
        throw Error(ErrorCode::numeric, "drift coefficient is not finite on the patch");
    }
    op.drift_[a] = std::move(vals);
  }
  return op;
}

Eigen::VectorXd LatticeOperator::apply(const Eigen::VectorXd& u) const {
  const GridDomain& dom = second_.domain();
  if (std::size_t(u.size()) != dom.size())
    throw Error(ErrorCode::dimension, "field length does not match the grid");
  Eigen::VectorXd out = second_.apply(u);
  const auto step = strides(dom);
  const auto hs = dom.spacing();
  auto val = [&](std::size_t j) { return second_.interior(j) ? u[j] : 0.0; };
  for (int a = 0; a < 3; ++a) {
    if (drift_[a].size() == 0 || !axis_active(dom, a)) continue;
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      if (!second_.interior(idx)) continue;
      out[idx] += drift_[a][idx] *
                  (val(idx + step[a]) - val(idx - step[a])) / (2.0 * hs[a]);
    }
  }
  return out;
}

Eigen::VectorXd conjugated_apply(const LatticeOperator& P, const ScalarField& phi,
                                 double tau, const Eigen::VectorXd& u) {
  const GridDomain& dom = P.domain();
  if (std::size_t(u.size()) != dom.size())
    throw Error(ErrorCode::dimension, "field length does not match the grid");
  if (!phi) throw Error(ErrorCode::config, "conjugation needs a weight function");

  Eigen::VectorXd pv(dom.size());
  for (std::size_t idx = 0; idx < dom.size(); ++idx) {
    pv[idx] = eval_value(phi, dom.point(idx));
    if (!std::isfinite(pv[idx]))
      throw Error(ErrorCode::numeric, "weight function is not finite on the patch");
  }
  const double shift = tau * (pv.maxCoeff() + pv.minCoeff()) / 2.0;

  Eigen::VectorXd inner(dom.size());
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    inner[idx] = std::exp(-(tau * pv[idx] - shift)) * u[idx];
  Eigen::VectorXd out = P.apply(inner);
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    out[idx] *= std::exp(tau * pv[idx] - shift);
  if (!out.allFinite())
    throw Error(ErrorCode::numeric,
                "conjugated apply overflowed; the weight spans too wide a range");
  return out;
}

double RatioCurve::max_ratio() const {
  if (ratios.empty()) throw Error(ErrorCode::domain, "ratio curve is empty");
  return *std::max_element(ratios.begin(), ratios.end());
}

double RatioCurve::min_ratio() const {
  if (ratios.empty()) throw Error(ErrorCode::domain, "ratio curve is empty");
  return *std::min_element(ratios.begin(), ratios.end());
}

double RatioCurve::median_ratio() const {
  if (ratios.empty()) throw Error(ErrorCode::domain, "ratio curve is empty");
  std::vector<double> s = ratios;
  std::sort(s.begin(), s.end());
  const std::size_t m = s.size() / 2;
  return s.size() % 2 == 1 ? s[m] : 0.5 * (s[m - 1] + s[m]);
}

RatioCurve carleman_ratio(const LatticeOperator& P, const ScalarField& phi,
                          const std::vector<Eigen::VectorXd>& test_fns,
                          const std::vector<double>& tau_grid,
                          std::string test_family) {
  const GridDomain& dom = P.domain();
  if (!phi) throw Error(ErrorCode::config, "ratio experiment needs a weight function");
  if (test_fns.empty())
    throw Error(ErrorCode::config, "ratio experiment needs at least one test function");
  if (tau_grid.empty())
    throw Error(ErrorCode::config, "ratio experiment needs at least one tau value");

  const auto hs = dom.spacing();
  double h = 0.0;
  for (int a = 0; a < 3; ++a)
    if (axis_active(dom, a)) h = (h == 0.0) ? hs[a] : std::min(h, hs[a]);
  if (h == 0.0) throw Error(ErrorCode::dimension, "patch has no active axis");
  const double tau_max = 0.5 / h;
  for (double tau : tau_grid)
    if (!(tau > 0.0) || tau > tau_max * (1.0 + 1e-12))
      throw Error(ErrorCode::config,
                  "tau " + format_exact(tau) + " outside the admissible range (0, " +
                      format_exact(tau_max) + "]");

  const auto& n = dom.counts();
  for (const Eigen::VectorXd& u : test_fns) {
    if (std::size_t(u.size()) != dom.size())
      throw Error(ErrorCode::dimension, "test function length does not match the grid");
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      if (u[idx] == 0.0) continue;
      const auto c = dom.coords(idx);
      for (int a = 0; a < 3; ++a)
        if (axis_active(dom, a) && (c[a] < 3 || c[a] > n[a] - 4))
          throw Error(ErrorCode::config,
                      "test function support reaches within 3 cells of the patch boundary");
    }
  }

  // tau-independent pieces: P u and the centered gradient of each function.
  Eigen::VectorXd pv(dom.size());
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    pv[idx] = eval_value(phi, dom.point(idx));
  if (!pv.allFinite())
    throw Error(ErrorCode::numeric, "weight function is not finite on the patch");
  const double mid = (pv.maxCoeff() + pv.minCoeff()) / 2.0;
  const auto step = strides(dom);

  struct Prepared {
    Eigen::VectorXd pu;
    std::vector<Eigen::VectorXd> grad;
  };
  std::vector<Prepared> prep;
  prep.reserve(test_fns.size());
  for (const Eigen::VectorXd& u : test_fns) {
    Prepared p;
    p.pu = P.apply(u);
    for (int a = 0; a < 3; ++a) {
      if (!axis_active(dom, a)) continue;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dom.size());
      for (std::size_t idx = 0; idx < dom.size(); ++idx) {
        if (!P.interior(idx)) continue;
        auto val = [&](std::size_t j) { return P.interior(j) ? u[j] : 0.0; };
        g[idx] = (val(idx + step[a]) - val(idx - step[a])) / (2.0 * hs[a]);
      }
      p.grad.push_back(std::move(g));
    }
    prep.push_back(std::move(p));
  }

  RatioCurve curve;
  curve.tau_grid = tau_grid;
  curve.test_family = std::move(test_family);
  curve.h = h;
  curve.tau_max_admissible = tau_max;

  Eigen::VectorXd w(dom.size());
  for (double tau : tau_grid) {
    const double shift = tau * mid;
    for (std::size_t idx = 0; idx < dom.size(); ++idx)
      w[idx] = std::exp(tau * pv[idx] - shift);
    double worst = -1.0;
    for (std::size_t f = 0; f < test_fns.size(); ++f) {
      double num = tau * tau * tau * w.cwiseProduct(test_fns[f]).squaredNorm();
      for (const Eigen::VectorXd& g : prep[f].grad)
        num += tau * w.cwiseProduct(g).squaredNorm();
      const double den = w.cwiseProduct(prep[f].pu).squaredNorm();
      if (den == 0.0 || den <= num * 1e-200) {
        ++curve.skipped;  // function sits in the discrete kernel at this weight
        continue;
      }
      worst = std::max(worst, num / den);
    }
    if (worst < 0.0)
      throw Error(ErrorCode::numeric,
                  "every test function was annihilated by the operator at tau " +
                      format_exact(tau));
    if (!std::isfinite(worst))
      throw Error(ErrorCode::numeric, "ratio overflowed at tau " + format_exact(tau));
    curve.ratios.push_back(worst);
  }
  return curve;
}

std::vector<Eigen::VectorXd> random_bump_family(const GridDomain& dom, int count,
                                                std::uint64_t seed) {
  if (count <= 0) throw Error(ErrorCode::config, "bump family needs a positive count");
  const auto& n = dom.counts();
  const auto hs = dom.spacing();
  for (int a = 0; a < 3; ++a)
    if (axis_active(dom, a) && n[a] < 20)
      throw Error(ErrorCode::dimension, "grid too coarse for an interior bump family");

  Rng rng(seed);
  auto bump = [](double s) {
    const double s2 = s * s;
    return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0;
  };

  std::vector<Eigen::VectorXd> family;
  family.reserve(std::size_t(count));
  for (int f = 0; f < count; ++f) {
    std::array<double, 3> center{};
    std::array<double, 3> width{1.0, 1.0, 1.0};
    for (int a = 0; a < 3; ++a) {
      if (!axis_active(dom, a)) continue;
      const double lo = dom.lower()[a] + 2.5 * hs[a];
      const double hi = dom.upper()[a] - 2.5 * hs[a];
      const double wmax = std::max(6.0 * hs[a], (hi - lo) / 4.0);
      width[a] = rng.uniform(6.0 * hs[a], wmax);
      center[a] = rng.uniform(lo + width[a], hi - width[a]);
    }
    Eigen::VectorXd u(dom.size());
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      const Eigen::VectorXd x = dom.point(idx);
      double v = 1.0;
      for (int a = 0; a < dom.dim(); ++a)
        if (axis_active(dom, a)) v *= bump((x[a] - center[a]) / width[a]);
      u[idx] = v;
    }
    const double nrm = u.norm();
    if (nrm > 0.0) u /= nrm;
    family.push_back(std::move(u));
  }
  return family;
}

std::string ratio_csv(const RatioCurve& curve) {
  std::string out = "tau,ratio\n";
  for (std::size_t i = 0; i < curve.tau_grid.size(); ++i)
    out += format_exact(curve.tau_grid[i]) + "," + format_exact(curve.ratios[i]) + "\n";
  return out;
}

}  // namespace carleman
