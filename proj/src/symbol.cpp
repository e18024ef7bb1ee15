#include "carleman/symbol.hpp"

#include <cmath>

namespace carleman {

namespace {

std::size_t upper_count(int n) { return std::size_t(n) * (n + 1) / 2; }

}  // namespace

PrincipalSymbol PrincipalSymbol::wave(int spatial_dim, std::vector<ExprPtr> g_upper) {
  if (spatial_dim < 1)
    throw Error(ErrorCode::dimension, "wave symbol: spatial dimension must be >= 1");
  if (g_upper.size() != upper_count(spatial_dim))
    throw Error(ErrorCode::dimension, "wave symbol: expected d*(d+1)/2 coefficient fields");
  for (const auto& e : g_upper)
    if (!e || min_dimension(e) > spatial_dim)
      throw Error(ErrorCode::dimension, "wave symbol: coefficient uses too many variables");
  PrincipalSymbol p;
  p.dim_ = spatial_dim + 1;
  p.wave_ = true;
  p.conv_ = VarConvention::time_space;
  p.coeff_ = std::move(g_upper);
  return p;
}

PrincipalSymbol PrincipalSymbol::minkowski(int spatial_dim) {
  std::vector<ExprPtr> g;
  for (int i = 0; i < spatial_dim; ++i)
    for (int j = i; j < spatial_dim; ++j) g.push_back(make_constant(i == j ? 1.0 : 0.0));
  return wave(spatial_dim, std::move(g));
}

PrincipalSymbol PrincipalSymbol::general(int dim, std::vector<ExprPtr> a_upper,
                                         VarConvention conv) {
  if (dim < 1) throw Error(ErrorCode::dimension, "symbol: dimension must be >= 1");
  if (a_upper.size() != upper_count(dim))
    throw Error(ErrorCode::dimension, "symbol: expected n*(n+1)/2 coefficient fields");
  for (const auto& e : a_upper)
    if (!e || min_dimension(e) > dim)
      throw Error(ErrorCode::dimension, "symbol: coefficient uses too many variables");
  PrincipalSymbol p;
  p.dim_ = dim;
  p.wave_ = false;
  p.conv_ = conv;
  p.coeff_ = std::move(a_upper);
  return p;
}

PrincipalSymbol PrincipalSymbol::laplace(int dim) {
  std::vector<ExprPtr> a;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) a.push_back(make_constant(i == j ? 1.0 : 0.0));
  return general(dim, std::move(a), VarConvention::spatial);
}

PrincipalSymbol::Point PrincipalSymbol::at(const Eigen::VectorXd& x) const {
  if (int(x.size()) != dim_)
    throw Error(ErrorCode::dimension, "symbol: point has wrong dimension");
  Point pt;
  pt.A = Eigen::MatrixXd::Zero(dim_, dim_);
  pt.dA.assign(dim_, Eigen::MatrixXd::Zero(dim_, dim_));
  if (wave_) {
    const int d = dim_ - 1;
    const Eigen::VectorXd xs = x.tail(d);
    pt.A(0, 0) = -1.0;
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j, ++idx) {
        const Jet2 jet = eval_jet2(coeff_[idx], xs);
        if (!std::isfinite(jet.value) || !jet.grad.allFinite())
          throw Error(ErrorCode::numeric, "symbol: non-finite coefficient value");
        pt.A(i + 1, j + 1) = pt.A(j + 1, i + 1) = jet.value;
        for (int k = 0; k < d; ++k) {
          pt.dA[k + 1](i + 1, j + 1) = pt.dA[k + 1](j + 1, i + 1) = jet.grad[k];
        }
      }
    }
  } else {
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i) {
      for (int j = i; j < dim_; ++j, ++idx) {
        const Jet2 jet = eval_jet2(coeff_[idx], x);
        if (!std::isfinite(jet.value) || !jet.grad.allFinite())
          throw Error(ErrorCode::numeric, "symbol: non-finite coefficient value");
        pt.A(i, j) = pt.A(j, i) = jet.value;
        for (int k = 0; k < dim_; ++k) {
          pt.dA[k](i, j) = pt.dA[k](j, i) = jet.grad[k];
        }
      }
    }
  }
  return pt;
}

Eigen::MatrixXd PrincipalSymbol::matrix_at(const Eigen::VectorXd& x) const {
  if (int(x.size()) != dim_)
    throw Error(ErrorCode::dimension, "symbol: point has wrong dimension");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim_, dim_);
  if (wave_) {
    const int d = dim_ - 1;
    const Eigen::VectorXd xs = x.tail(d);
    A(0, 0) = -1.0;
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++idx)
        A(i + 1, j + 1) = A(j + 1, i + 1) = eval_value(coeff_[idx], xs);
  } else {
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j, ++idx)
        A(i, j) = A(j, i) = eval_value(coeff_[idx], x);
  }
  return A;
}

WeightPoint weight_at(const ScalarField& w, const Eigen::VectorXd& x) {
  const Jet2 jet = eval_jet2(w, x);
  if (!jet.finite())
    throw Error(ErrorCode::numeric, "weight field evaluates to a non-finite jet");
  WeightPoint wp;
  wp.value = jet.value;
  wp.grad = jet.grad;
  wp.hess = jet.hess.dense();
  // The jet may use fewer slots than the ambient dimension; pad with zeros.
  if (wp.grad.size() < x.size()) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    g.head(wp.grad.size()) = wp.grad;
    wp.grad = g;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
    h.topLeftCorner(wp.hess.rows(), wp.hess.cols()) = wp.hess;
    wp.hess = h;
  }
  return wp;
}

double eval_p2(const PrincipalSymbol& p, const Eigen::VectorXd& x,
               const Eigen::VectorXd& xi) {
  return eval_p2(p.at(x), xi);
}

double eval_p2(const PrincipalSymbol::Point& pt, const Eigen::VectorXd& xi) {
  if (xi.size() != pt.A.rows())
    throw Error(ErrorCode::dimension, "eval_p2: covector has wrong dimension");
  return xi.dot(pt.A * xi);
}

std::complex<double> eval_p2(const PrincipalSymbol::Point& pt,
                             const Eigen::VectorXcd& zeta) {
  if (zeta.size() != pt.A.rows())
    throw Error(ErrorCode::dimension, "eval_p2: covector has wrong dimension");
  // Bilinear (not sesquilinear) extension: zeta^T A zeta.
  return (zeta.transpose() * pt.A * zeta)(0, 0);
}

ConjValue conjugate_symbol(const PrincipalSymbol& p, const ScalarField& phi,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                           double tau) {
  return conjugate_symbol(p.at(x), weight_at(phi, x), xi, tau);
}

ConjValue conjugate_symbol(const PrincipalSymbol::Point& pt, const WeightPoint& w,
                           const Eigen::VectorXd& xi, double tau) {
  const Eigen::VectorXd Ag = pt.A * w.grad;
  ConjValue cv;
  cv.re = xi.dot(pt.A * xi) - tau * tau * w.grad.dot(Ag);
  cv.im_over_tau = 2.0 * xi.dot(Ag);
  cv.im = tau * cv.im_over_tau;
  return cv;
}

BracketSuite bracket_suite(const PrincipalSymbol& p, const ScalarField& psi,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                           double tau) {
  return bracket_suite(p.at(x), weight_at(psi, x), xi, tau);
}

BracketSuite bracket_suite(const PrincipalSymbol::Point& pt, const WeightPoint& w,
                           const Eigen::VectorXd& xi, double tau) {
  const int n = int(pt.A.rows());
  if (int(xi.size()) != n || int(w.grad.size()) != n)
    throw Error(ErrorCode::dimension, "bracket_suite: mismatched dimensions");

  const Eigen::VectorXd Axi = pt.A * xi;
  const Eigen::VectorXd Ag = pt.A * w.grad;

  BracketSuite s;
  s.p2 = xi.dot(Axi);
  // {p, psi} = dp/dxi . dpsi/dx = 2 (A xi) . psi'
  s.b1 = 2.0 * Axi.dot(w.grad);

  // {p, {p, psi}} expanded in terms of (A, dA, psi', psi''):
  //   4 sum_k (A xi)_k xi^T (d_k A) psi'
  // + 4 psi''(A xi, A xi)
  // - 2 sum_k xi^T (d_k A) xi (A psi')_k
  double b2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd dAxi = pt.dA[k] * xi;
    b2 += 4.0 * Axi[k] * dAxi.dot(w.grad);
    b2 -= 2.0 * xi.dot(dAxi) * Ag[k];
  }
  b2 += 4.0 * Axi.dot(w.hess * Axi);
  s.b2 = b2;

  s.p_psi = conjugate_symbol(pt, w, xi, tau);

  const double p2_grad = w.grad.dot(Ag);
  s.b_psi_psi = std::complex<double>(s.b1, 2.0 * tau * p2_grad);

  // Bracket of the conjugated symbol.  With zeta = xi + i tau psi':
  //   c = (4/tau) Im sum_k (A conj(zeta))_k (zeta^T (d_k A) zeta)
  //     + 8 [ psi''(A xi, A xi) + tau^2 psi''(A psi', A psi') ]
  // and c -> 2 b2 as tau -> 0 (used verbatim below the threshold).
  const double tau_small = 1e-7 * (1.0 + xi.norm() + w.grad.norm());
  if (std::abs(tau) <= tau_small) {
    s.c_psi = 2.0 * s.b2;
  } else {
    const std::complex<double> I(0.0, 1.0);
    Eigen::VectorXcd zeta = xi.cast<std::complex<double>>() +
                            I * tau * w.grad.cast<std::complex<double>>();
    const Eigen::VectorXcd Azbar = (pt.A * zeta.conjugate().matrix()).eval();
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      const std::complex<double> zdAz = (zeta.transpose() * pt.dA[k] * zeta)(0, 0);
      acc += Azbar[k] * zdAz;
    }
    double c = (4.0 / tau) * acc.imag();
    c += 8.0 * (Axi.dot(w.hess * Axi) + tau * tau * Ag.dot(w.hess * Ag));
    s.c_psi = c;
  }
  return s;
}

}  // namespace carleman
