#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "carleman/symbol.hpp"

namespace carleman {

// Even C^2 bump on [-1, 1]: value 1 at the origin, 0 at the endpoints, with
// derivative bounded by a declared budget.  Built as the convolution of a
// triangle profile with a quartic mollifier, then renormalized to unit peak;
// the triangle slope is chosen at 98% of the budget so the renormalization
// cannot push the derivative over it.
class BumpProfile {
 public:
  BumpProfile() = default;  // zero profile; use build() for a real one

  // slope_budget: the bound alpha that |zeta'| must stay under.
  static BumpProfile build(double slope_budget);

  double value(double s) const;
  double derivative(double s) const;
  double second_derivative(double s) const;

  double triangle_halfwidth() const { return s1_; }
  double mollifier_width() const { return width_; }
  double peak_scale() const { return scale_; }
  // slope_budget - max |zeta'|, sampled densely (1e4 points).
  double slope_margin() const;

 private:
  double s1_ = 0.0;     // triangle reaches zero at +-s1
  double width_ = 0.0;  // mollifier support half-width
  double scale_ = 1.0;  // renormalization so value(0) = 1
  double budget_ = 0.0;
};

// Parameters of the sliding-hypersurface family Psi_eps(t, w, l) =
// eps * ell0 * zeta(sqrt((|w|/b)^2 + (t/t0)^2)) - l over the disc D x [0,
// ell0].  spatial_dim d means w has d-1 components; the ambient symbol lives
// on (t, w, l).
struct SweepFamily {
  double ell0 = 1.0;
  double t0 = 1.3;
  double alpha = 1.2;
  double b = 0.1;
  double delta = 0.2;  // coordinate patch radius; requires b < delta
  int spatial_dim = 2;
  BumpProfile zeta;

  // Validates parameter ranges and the zeta profile invariants (even,
  // endpoints, positivity, slope bound) by dense sampling; throws on
  // violation.  alpha >= t0/ell0 is allowed but reported as a broken
  // hypothesis by build_sweep.
  static SweepFamily make(double ell0, double t0, double alpha, double b,
                          double delta, int spatial_dim);
};

// Wave-type symbol -xi_t^2 + m'(l) xi_w . xi_w + xi_l^2 over (t, w, l) with a
// block-diagonal spatial cometric; m_prime_upper is the packed upper triangle
// of the (d-1) x (d-1) block as fields of the spatial variables (they should
// depend on the last one, l).  Empty means the identity block.
PrincipalSymbol normal_form_symbol(int spatial_dim,
                                   std::vector<ExprPtr> m_prime_upper = {});

struct SweepGrid {
  int eps_count = 17;  // eps in [0, 1]
  int nt = 41;         // t in [-t0, t0]
  int nw = 21;         // per w-axis in [-b, b]
  int nl = 9;          // l in [0, ell0]
};

struct SweepWitness {
  double eps = 0.0;
  Eigen::VectorXd x;   // (t, w, l)
  double value = 0.0;  // p2 at dPsi_eps there
};

struct SweepReport {
  std::vector<double> eps_grid;
  std::vector<double> margins;  // min of p2(x, dPsi_eps) per eps
  double min_margin = 0.0;
  bool noncharacteristic = false;
  // Idealized prediction 1 - alpha^2 ell0^2 / t0^2 (exact normal form, w = 0).
  double eta_pred = 0.0;
  bool hypothesis_ok = false;  // 1 < alpha < t0 / ell0
  double slope_margin = 0.0;
  // Continuity data: largest margin jump between adjacent eps samples and the
  // pointwise sensitivity bound that dominates it.
  double max_margin_jump = 0.0;
  double eps_sensitivity = 0.0;
  SweepWitness worst;
};

SweepReport build_sweep(const SweepFamily& family, const PrincipalSymbol& p,
                        const SweepGrid& grid = {});

}  // namespace carleman
