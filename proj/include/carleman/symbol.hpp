#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "carleman/expr.hpp"

namespace carleman {

// Principal symbol of a second-order operator: p(x, xi) = xi^T A(x) xi with
// A(x) symmetric, given as a packed upper triangle of coefficient fields.
//
// The wave-type form fixes A = diag(-1, g(x)) in (t, x1..xd) coordinates with
// a time-independent spatial block g; several downstream checks (the xi_t = 0
// mode, the sweep construction) are only meaningful for this form.
class PrincipalSymbol {
 public:
  // g_upper: d*(d+1)/2 fields over x1..xd (spatial naming), row-major upper
  // triangle of the spatial cometric.
  static PrincipalSymbol wave(int spatial_dim, std::vector<ExprPtr> g_upper);

  // Wave-type with the identity spatial block: -xi_t^2 + |xi_x|^2.
  static PrincipalSymbol minkowski(int spatial_dim);

  // Arbitrary symmetric A over `dim` variables.  With time_space naming the
  // first variable is t (no structure assumed beyond symmetry).
  static PrincipalSymbol general(int dim, std::vector<ExprPtr> a_upper,
                                 VarConvention conv = VarConvention::spatial);

  // |xi|^2 over `dim` spatial variables.
  static PrincipalSymbol laplace(int dim);

  int dim() const { return dim_; }
  bool wave_type() const { return wave_; }
  VarConvention convention() const { return conv_; }

  // Coefficient data at one point: the matrix and its coordinate derivatives
  // dA[k](i,j) = d_{x_k} a_{ij}(x).  Everything downstream (both Poisson
  // brackets and the conjugate-symbol bracket) needs no more than this.
  struct Point {
    Eigen::MatrixXd A;
    std::vector<Eigen::MatrixXd> dA;
  };
  Point at(const Eigen::VectorXd& x) const;

  // Value-only coefficient matrix (cheaper; used by grid samplers).
  Eigen::MatrixXd matrix_at(const Eigen::VectorXd& x) const;

 private:
  PrincipalSymbol() = default;

  int dim_ = 0;
  bool wave_ = false;
  VarConvention conv_ = VarConvention::spatial;
  std::vector<ExprPtr> coeff_;  // packed upper triangle
};

// Weight field data at a point (dense Hessian for quadratic-form use).
struct WeightPoint {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};
WeightPoint weight_at(const ScalarField& w, const Eigen::VectorXd& x);

double eval_p2(const PrincipalSymbol& p, const Eigen::VectorXd& x,
               const Eigen::VectorXd& xi);
double eval_p2(const PrincipalSymbol::Point& pt, const Eigen::VectorXd& xi);

// p evaluated on a complex covector (used for conjugation cross-checks).
std::complex<double> eval_p2(const PrincipalSymbol::Point& pt,
                             const Eigen::VectorXcd& zeta);

// Conjugated symbol p(x, xi + i tau dPhi(x)) split into real and imaginary
// parts; im_over_tau = im / tau stays finite as tau -> 0.
struct ConjValue {
  double re = 0.0;
  double im_over_tau = 0.0;
  double im = 0.0;
};
ConjValue conjugate_symbol(const PrincipalSymbol& p, const ScalarField& phi,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                           double tau);
ConjValue conjugate_symbol(const PrincipalSymbol::Point& pt, const WeightPoint& w,
                           const Eigen::VectorXd& xi, double tau);

// All bracket quantities of (p, psi) at one phase-space point:
//   p2        p(x, xi)
//   b1        {p, psi}
//   b2        {p, {p, psi}}
//   p_psi     conjugated symbol at (xi, tau)
//   b_psi_psi {p_psi, psi} = b1 + 2 i tau p(x, dpsi)
//   c_psi     bracket of the conjugated symbol, (1/ i tau)-normalized so that
//             c_psi -> 2 b2 as tau -> 0
struct BracketSuite {
  double p2 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  ConjValue p_psi;
  std::complex<double> b_psi_psi;
  double c_psi = 0.0;
};
BracketSuite bracket_suite(const PrincipalSymbol& p, const ScalarField& psi,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                           double tau);
BracketSuite bracket_suite(const PrincipalSymbol::Point& pt, const WeightPoint& w,
                           const Eigen::VectorXd& xi, double tau);

}  // namespace carleman
