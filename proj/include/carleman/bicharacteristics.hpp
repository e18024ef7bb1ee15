#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "carleman/symbol.hpp"

namespace carleman {

// Hamiltonian right-hand side for a polynomial symbol.  Two shapes are
// supported: the quadratic form xi^T A(x) xi shared with the rest of the
// library, and a first-order symbol v(x) . xi whose projected trajectories
// are integral curves of the vector field v.
class HamiltonSystem {
 public:
  static HamiltonSystem quadratic(PrincipalSymbol p);
  static HamiltonSystem first_order(std::vector<ScalarField> v,
                                    VarConvention conv = VarConvention::spatial);

  int dim() const { return dim_; }
  VarConvention convention() const { return conv_; }

  // Symbol value p(x, xi).
  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const;

  // dx/ds = d_xi p, dxi/ds = -d_x p.
  void derivative(const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                  Eigen::VectorXd& dx, Eigen::VectorXd& dxi) const;

 private:
  HamiltonSystem() = default;

  int dim_ = 0;
  VarConvention conv_ = VarConvention::spatial;
  std::optional<PrincipalSymbol> quad_;
  std::vector<ScalarField> linear_;
};

struct TrajectorySample {
  double s = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
};

struct FlowTrajectory {
  std::vector<TrajectorySample> samples;  // includes s = 0
  std::vector<double> p_values;           // symbol value at each sample
  double step = 0.0;

  // max_s |p(s) - p(0)| / (1 + |p(0)|); the conservation defect of the
  // integrator, zero for the exact flow.
  double conservation_defect() const;
};

struct FlowOptions {
  double step = 1e-3;
  // Abort if the trajectory leaves [-box_halfwidth, box_halfwidth]^n.
  double box_halfwidth = 1e6;
};

// Classical fixed-step RK4 on the Hamilton system.  Negative s_max integrates
// backward; samples are emitted in integration order starting at s = 0.
FlowTrajectory integrate(const HamiltonSystem& H, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& xi0, double s_max,
                         const FlowOptions& opt = {});

enum class TangencyClass { transversal, convex_tangent, concave_tangent, higher_order };

std::string to_string(TangencyClass c);

// Contact data of the projected trajectory against the level set of psi
// through `base`: c(s) = psi(x_s), with derivatives at s = 0 taken from
// one-sided finite differences along the stored samples.
struct TangencyReport {
  double c0 = 0.0;
  double c_dot0 = 0.0;
  double c_ddot0 = 0.0;
  TangencyClass cls = TangencyClass::transversal;
};

TangencyReport classify_tangency(const FlowTrajectory& traj, const ScalarField& psi,
                                 const Eigen::VectorXd& base);

// CSV dump: header s,<coords>,xi_<coords>,p with one row per sample.
std::string trajectory_csv(const FlowTrajectory& traj, VarConvention conv);

}  // namespace carleman
