#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "carleman/expr.hpp"

namespace carleman {

// Uniform tensor grid over a box in 1, 2 or 3 dimensions, with an optional
// Riemannian metric g_ij(x) and a mask selecting the active region.  Unused
// trailing axes carry a single point so that index arithmetic is uniform.
class GridDomain {
 public:
  // metric_upper: packed upper triangle of g_ij over x1..xdim (spatial
  // naming), or empty for the identity.  The smallest metric eigenvalue is
  // checked to be positive at every masked point.
  static GridDomain make(int dim, std::array<double, 3> lo, std::array<double, 3> hi,
                         std::array<int, 3> n,
                         std::vector<ExprPtr> metric_upper = {},
                         std::vector<std::uint8_t> mask = {});

  int dim() const { return dim_; }
  const std::array<int, 3>& counts() const { return n_; }
  const std::array<double, 3>& lower() const { return lo_; }
  const std::array<double, 3>& upper() const { return hi_; }
  std::array<double, 3> spacing() const;
  std::size_t size() const { return std::size_t(n_[0]) * n_[1] * n_[2]; }

  std::size_t index(int i, int j = 0, int k = 0) const {
    return (std::size_t(i) * n_[1] + j) * n_[2] + k;
  }
  std::array<int, 3> coords(std::size_t idx) const;
  Eigen::VectorXd point(std::size_t idx) const;

  bool masked(std::size_t idx) const { return mask_.empty() || mask_[idx] != 0; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  bool identity_metric() const { return metric_.empty(); }
  // Metric matrix at an arbitrary point (identity when no metric was given).
  Eigen::MatrixXd metric_at(const Eigen::VectorXd& x) const;
  // Length of the straight segment from a to b under the midpoint rule.
  double segment_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

 private:
  GridDomain() = default;

  int dim_ = 0;
  std::array<double, 3> lo_{};
  std::array<double, 3> hi_{};
  std::array<int, 3> n_{1, 1, 1};
  std::vector<ExprPtr> metric_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace carleman
