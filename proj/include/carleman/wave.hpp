#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>

#include "carleman/grid.hpp"

namespace carleman {

// State of the second-order evolution: displacement and velocity over the
// full node set.  Box faces and masked-out nodes are pinned to zero
// (homogeneous Dirichlet).
struct WaveState {
  GridDomain dom;
  Eigen::VectorXd u;
  Eigen::VectorXd v;  // d_t u at the same time level
  double time = 0.0;
};

WaveState make_wave_state(
    const GridDomain& dom,
    const std::function<double(const Eigen::VectorXd&)>& u0,
    const std::function<double(const Eigen::VectorXd&)>& u1);

// Spatial operator L u = -div(g grad u) + q u with Dirichlet conditions.
// Diagonal metric terms are discretized in flux form with face-averaged
// coefficients and cross terms with centered differences, so the assembled
// action is symmetric; the adjoint identities in the control experiments
// depend on that symmetry holding to round-off.
class WaveOperator {
 public:
  static WaveOperator make(const GridDomain& dom, const ScalarField& q = nullptr);

  const GridDomain& domain() const { return dom_; }
  // Largest propagation speed sqrt(lambda_max(g)) over active nodes.
  double max_speed() const { return c_max_; }
  double min_spacing() const { return h_min_; }
  double cfl(double dt) const { return c_max_ * std::abs(dt) / h_min_; }
  bool interior(std::size_t idx) const { return interior_[idx] != 0; }
  const Eigen::VectorXd& potential() const { return q_; }

  void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;

 private:
  explicit WaveOperator(GridDomain d) : dom_(std::move(d)) {}

  GridDomain dom_;
  Eigen::VectorXd q_;
  std::vector<std::uint8_t> interior_;
  // Face conductivities per axis: face_[a][idx] couples idx and idx + step_a.
  std::array<std::vector<double>, 3> face_;
  // Node values of the off-diagonal metric entries g_ab, pair order
  // (0,1), (0,2), (1,2).
  std::array<std::vector<double>, 3> cross_;
  double c_max_ = 0.0;
  double h_min_ = 0.0;
};

// One step of the symmetric (velocity Verlet form) integrator for
// d_t^2 u = -L u + f.  Negative dt steps backward; the scheme is exactly
// time-reversible.  Forcing values are taken at the current and the next
// time level; null pointers mean zero.
WaveState step_leapfrog(const WaveState& s, double dt, const WaveOperator& op,
                        const Eigen::VectorXd* forcing_now = nullptr,
                        const Eigen::VectorXd* forcing_next = nullptr);

// Discrete energy  1/2 sum (v^2 + g grad u . grad u + q u^2) h^d  minus the
// step-size correction dt^2/8 |L u|^2 that makes it an exact invariant of
// the integrator for f = 0 (it differs from the plain quadratic by O(dt^2)).
double wave_energy(const WaveState& s, const WaveOperator& op, double dt);

// Exact free-line solution  1/2 (u0(x-t) + u0(x+t)) + 1/2 int_{x-t}^{x+t} u1,
// valid wherever the boundary has not yet influenced (t below the distance
// of x to the ends of the data support from the walls).
double dalembert_oracle(const std::function<double(double)>& u0,
                        const std::function<double(double)>& u1, double t,
                        double x);

// Spherical-mean solution  (t / 4 pi) int_{S^2} u1(x - t sigma) dS(sigma)
// of the free 3-d wave with u(0)=0, d_t u(0)=u1, by a product Gauss rule
// exact through the given spherical-harmonic degree (>= 17 required).
double kirchhoff_oracle(const std::function<double(const Eigen::Vector3d&)>& u1,
                        double t, const Eigen::Vector3d& x, int quad_order = 23);

struct FiniteSpeedReport {
  double r0 = 0.0;
  double slack_cells = 0.0;  // grid slack kappa in cells
  double data_norm = 0.0;    // max |u0|, |v0| over the grid
  double max_in_cone = 0.0;  // worst |u| seen inside the shrinking cone
  std::size_t cone_samples = 0;
  bool ok = false;  // max_in_cone <= 1e-8 * data_norm
};

// Evolve `steps` leapfrog steps and record the largest |u| inside the cone
// |x| <= r0 - c_max t - kappa h, which the solution must not enter when the
// data vanish on |x| <= r0.
FiniteSpeedReport finite_speed_check(const WaveState& initial,
                                     const WaveOperator& op, double dt,
                                     int steps, double r0, double kappa = 2.0);

}  // namespace carleman
