#include "carleman/bicharacteristics.hpp"

#include <cmath>
#include <sstream>

#include "carleman/util.hpp"

namespace carleman {

HamiltonSystem HamiltonSystem::quadratic(PrincipalSymbol p) {
  HamiltonSystem h;
  h.dim_ = p.dim();
  h.conv_ = p.convention();
  h.quad_ = std::move(p);
  return h;
}

HamiltonSystem HamiltonSystem::first_order(std::vector<ScalarField> v,
                                           VarConvention conv) {
  if (v.empty())
    throw Error(ErrorCode::dimension, "first_order: empty coefficient vector");
  HamiltonSystem h;
  h.dim_ = int(v.size());
  h.conv_ = conv;
  h.linear_ = std::move(v);
  return h;
}

double HamiltonSystem::value(const Eigen::VectorXd& x,
                             const Eigen::VectorXd& xi) const {
  if (quad_) return eval_p2(*quad_, x, xi);
  double acc = 0.0;
  for (int k = 0; k < dim_; ++k) acc += eval_value(linear_[k], x) * xi[k];
  return acc;
}

void HamiltonSystem::derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                                Eigen::VectorXd& dx, Eigen::VectorXd& dxi) const {
  if (quad_) {
    const auto pt = quad_->at(x);
    dx = 2.0 * (pt.A * xi);
    dxi.resize(dim_);
    for (int k = 0; k < dim_; ++k) dxi[k] = -xi.dot(pt.dA[k] * xi);
    return;
  }
  dx.resize(dim_);
  dxi = Eigen::VectorXd::Zero(dim_);
  for (int j = 0; j < dim_; ++j) {
    const Jet2 jet = eval_jet2(linear_[j], x);
    if (!jet.finite())
      throw Error(ErrorCode::numeric, "Hamilton field: non-finite coefficient jet");
    dx[j] = jet.value;
    // -d_{x_k} p = -xi_j d_{x_k} v_j summed over j.
    dxi -= xi[j] * jet.grad;
  }
}

double FlowTrajectory::conservation_defect() const {
  if (p_values.empty()) return 0.0;
  const double p0 = p_values.front();
  double worst = 0.0;
  for (double v : p_values) worst = std::max(worst, std::abs(v - p0));
  return worst / (1.0 + std::abs(p0));
}

FlowTrajectory integrate(const HamiltonSystem& H, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& xi0, double s_max,
                         const FlowOptions& opt) {
  if (!(opt.step > 0.0))
    throw Error(ErrorCode::config, "integrate: step must be positive");
  if (x0.size() != H.dim() || xi0.size() != H.dim())
    throw Error(ErrorCode::dimension, "integrate: state size does not match symbol");

  const double dir = (s_max < 0.0) ? -1.0 : 1.0;
  const double h = dir * opt.step;
  const auto n_steps = std::size_t(std::llround(std::abs(s_max) / opt.step));

  FlowTrajectory out;
  out.step = opt.step;
  out.samples.reserve(n_steps + 1);
  out.p_values.reserve(n_steps + 1);

  Eigen::VectorXd x = x0, xi = xi0;
  Eigen::VectorXd k1x, k1p, k2x, k2p, k3x, k3p, k4x, k4p;
  for (std::size_t i = 0; i <= n_steps; ++i) {
    if (!x.allFinite() || !xi.allFinite())
      throw Error(ErrorCode::numeric, "integrate: trajectory became non-finite");
    if (x.cwiseAbs().maxCoeff() > opt.box_halfwidth)
      throw Error(ErrorCode::domain, "integrate: trajectory left the domain box");
    out.samples.push_back({dir * opt.step * double(i), x, xi});
    out.p_values.push_back(H.value(x, xi));
    if (i == n_steps) break;

    H.derivative(x, xi, k1x, k1p);
    H.derivative(x + 0.5 * h * k1x, xi + 0.5 * h * k1p, k2x, k2p);
    H.derivative(x + 0.5 * h * k2x, xi + 0.5 * h * k2p, k3x, k3p);
    H.derivative(x + h * k3x, xi + h * k3p, k4x, k4p);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    xi += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  }
  return out;
}

std::string to_string(TangencyClass c) {
  switch (c) {
    case TangencyClass::transversal: return "transversal";
    case TangencyClass::convex_tangent: return "convex-tangent";
    case TangencyClass::concave_tangent: return "concave-tangent";
    case TangencyClass::higher_order: return "higher-order";
  }
  return "?";
}

TangencyReport classify_tangency(const FlowTrajectory& traj, const ScalarField& psi,
                                 const Eigen::VectorXd& base) {
  if (traj.samples.size() < 6)
    throw Error(ErrorCode::dimension,
                "classify_tangency: need at least 6 samples for the contact stencil");
  const double level = eval_value(psi, base);
  const double c0 = eval_value(psi, traj.samples[0].x);
  if (std::abs(c0 - level) > 1e-10)
    throw Error(ErrorCode::domain,
                "classify_tangency: trajectory does not start on the surface");

  double c[6];
  for (int i = 0; i < 6; ++i) c[i] = eval_value(psi, traj.samples[i].x);
  // One-sided stencils on the first six samples (signed spacing handles
  // backward runs).
  const double h = traj.samples[1].s - traj.samples[0].s;
  static const double w1[6] = {-137.0 / 60.0, 5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0,
                               1.0 / 5.0};
  static const double w2[6] = {15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0,
                               61.0 / 12.0, -5.0 / 6.0};
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < 6; ++i) {
    d1 += w1[i] * c[i];
    d2 += w2[i] * c[i];
  }
  TangencyReport rep;
  rep.c0 = c0;
  rep.c_dot0 = d1 / h;
  rep.c_ddot0 = d2 / (h * h);
  if (std::abs(rep.c_dot0) > 1e-8) {
    rep.cls = TangencyClass::transversal;
  } else if (rep.c_ddot0 > 1e-8) {
    rep.cls = TangencyClass::convex_tangent;
  } else if (rep.c_ddot0 < -1e-8) {
    rep.cls = TangencyClass::concave_tangent;
  } else {
    rep.cls = TangencyClass::higher_order;
  }
  return rep;
}

std::string trajectory_csv(const FlowTrajectory& traj, VarConvention conv) {
  std::ostringstream os;
  const int n = traj.samples.empty() ? 0 : int(traj.samples[0].x.size());
  os << "s";
  for (int i = 0; i < n; ++i) os << "," << variable_name(conv, i);
  for (int i = 0; i < n; ++i) os << ",xi_" << variable_name(conv, i);
  os << ",p\n";
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const auto& smp = traj.samples[k];
    os << format_exact(smp.s);
    for (int i = 0; i < n; ++i) os << "," << format_exact(smp.x[i]);
    for (int i = 0; i < n; ++i) os << "," << format_exact(smp.xi[i]);
    os << "," << format_exact(traj.p_values[k]) << "\n";
  }
  return os.str();
}

}  // namespace carleman
