#pragma once

// Finite-difference oracles shared by the test suite.  These are kept
// deliberately dumb and independent of the library internals: central
// differences of plain callables.  Closed-form derivative code in the library
// is validated against these, never the other way around.

#include <Eigen/Core>
#include <complex>
#include <functional>

namespace oracle {

using RealFn = std::function<double(const Eigen::VectorXd&)>;

inline Eigen::VectorXd fd_gradient(const RealFn& f, const Eigen::VectorXd& x,
                                   double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_hessian(const RealFn& f, const Eigen::VectorXd& x,
                                  double h = 1e-4) {
  const int n = int(x.size());
  Eigen::MatrixXd H(n, n);
  const double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      H(i, j) = H(j, i) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
    }
  }
  return H;
}

// Phase-space functions f(x, xi) and their Poisson bracket
// {f, g} = sum_k d_{xi_k} f d_{x_k} g - d_{x_k} f d_{xi_k} g,
// all derivatives by central differences.  Works for complex-valued f, g too.
template <typename Scalar>
using PhaseFn = std::function<Scalar(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

template <typename Scalar>
Scalar fd_poisson_bracket(const PhaseFn<Scalar>& f, const PhaseFn<Scalar>& g,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                          double h = 1e-5) {
  Scalar acc{};
  for (int k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x, xip = xi, xim = xi;
    xp[k] += h;
    xm[k] -= h;
    xip[k] += h;
    xim[k] -= h;
    const Scalar df_dxi = (f(x, xip) - f(x, xim)) / (2.0 * h);
    const Scalar dg_dx = (g(xp, xi) - g(xm, xi)) / (2.0 * h);
    const Scalar df_dx = (f(xp, xi) - f(xm, xi)) / (2.0 * h);
    const Scalar dg_dxi = (g(x, xip) - g(x, xim)) / (2.0 * h);
    acc += df_dxi * dg_dx - df_dx * dg_dxi;
  }
  return acc;
}

inline double rel_err(double got, double want, double floor = 1.0) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

}  // namespace oracle
