#include "carleman/grid.hpp"

#include <Eigen/Eigenvalues>

#include "carleman/util.hpp"

namespace carleman {

GridDomain GridDomain::make(int dim, std::array<double, 3> lo,
                            std::array<double, 3> hi, std::array<int, 3> n,
                            std::vector<ExprPtr> metric_upper,
                            std::vector<std::uint8_t> mask) {
  if (dim < 1 || dim > 3)
    throw Error(ErrorCode::dimension, "GridDomain: dim must be 1, 2 or 3");
  GridDomain d;
  d.dim_ = dim;
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      if (n[a] < 2) throw Error(ErrorCode::config, "GridDomain: need >= 2 points per axis");
      if (!(hi[a] > lo[a]))
        throw Error(ErrorCode::config, "GridDomain: box must have positive extent");
      d.lo_[a] = lo[a];
      d.hi_[a] = hi[a];
      d.n_[a] = n[a];
    } else {
      d.lo_[a] = 0.0;
      d.hi_[a] = 0.0;
      d.n_[a] = 1;
    }
  }
  if (!metric_upper.empty()) {
    const std::size_t expect = std::size_t(dim) * (dim + 1) / 2;
    if (metric_upper.size() != expect)
      throw Error(ErrorCode::dimension,
                  "GridDomain: metric needs the packed upper triangle, " +
                      std::to_string(expect) + " entries");
    d.metric_ = std::move(metric_upper);
  }
  if (!mask.empty()) {
    if (mask.size() != d.size())
      throw Error(ErrorCode::dimension, "GridDomain: mask size does not match grid");
    d.mask_ = std::move(mask);
  }

  if (!d.metric_.empty()) {
    // The metric must stay positive definite wherever the domain is active.
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
      if (!d.masked(idx)) continue;
      const Eigen::MatrixXd g = d.metric_at(d.point(idx));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw Error(ErrorCode::domain,
                    "GridDomain: metric is not positive definite at a masked point");
    }
  }
  return d;
}

std::array<double, 3> GridDomain::spacing() const {
  std::array<double, 3> h{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) h[a] = (hi_[a] - lo_[a]) / double(n_[a] - 1);
  return h;
}

std::array<int, 3> GridDomain::coords(std::size_t idx) const {
  std::array<int, 3> c;
  c[2] = int(idx % n_[2]);
  idx /= n_[2];
  c[1] = int(idx % n_[1]);
  c[0] = int(idx / n_[1]);
  return c;
}

Eigen::VectorXd GridDomain::point(std::size_t idx) const {
  const auto c = coords(idx);
  const auto h = spacing();
  Eigen::VectorXd x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = lo_[a] + h[a] * c[a];
  return x;
}

Eigen::MatrixXd GridDomain::metric_at(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(dim_, dim_);
  if (metric_.empty()) return g;
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      g(i, j) = eval_value(metric_[k++], x);
      g(j, i) = g(i, j);
    }
  return g;
}

double GridDomain::segment_length(const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) const {
  const Eigen::VectorXd d = b - a;
  if (metric_.empty()) return d.norm();
  const Eigen::VectorXd mid = 0.5 * (a + b);
  return std::sqrt(d.dot(metric_at(mid) * d));
}

}  // namespace carleman
