#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "carleman/grid.hpp"
#include "carleman/wave.hpp"

namespace carleman {

// Discrete operator P = -div(g grad) + b . grad + c on a grid patch, with
// Dirichlet rows pinned.  The principal and zeroth-order parts ride on
// WaveOperator; the optional drift b uses centered differences.
class LatticeOperator {
 public:
  static LatticeOperator make(const GridDomain& dom,
                              const ScalarField& c = nullptr,
                              const std::vector<ScalarField>& b = {});

  const GridDomain& domain() const { return second_.domain(); }
  bool interior(std::size_t idx) const { return second_.interior(idx); }
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;

 private:
  explicit LatticeOperator(WaveOperator op) : second_(std::move(op)) {}

  WaveOperator second_;
  std::array<Eigen::VectorXd, 3> drift_;  // b values per axis, size 0 if absent
};

// e^{tau phi} P (e^{-tau phi} u).  The two weight factors are shifted by the
// mid-range exponent before exponentiating, so they never overflow on their
// own; only the local weight increments tau (phi_i - phi_j) enter the result.
Eigen::VectorXd conjugated_apply(const LatticeOperator& P, const ScalarField& phi,
                                 double tau, const Eigen::VectorXd& u);

// One weighted-inequality experiment: for each tau, the worst quotient
//   [tau^3 |W u|^2 + tau |W grad_h u|^2] / |W P u|^2,   W = e^{tau phi},
// over a family of test functions.
struct RatioCurve {
  std::vector<double> tau_grid;
  std::vector<double> ratios;
  std::string test_family;
  double h = 0.0;                  // finest grid spacing of the patch
  double tau_max_admissible = 0.0; // 0.5 / h: weight resolution cap
  int skipped = 0;                 // (function, tau) pairs with vanishing denominator

  double max_ratio() const;
  double min_ratio() const;
  double median_ratio() const;
  // Uniformity verdict: the curve counts as flat when its peak stays within
  // a factor 3 of the median.
  bool bounded() const { return max_ratio() <= 3.0 * median_ratio(); }
  double growth_factor() const { return max_ratio() / min_ratio(); }
};

// Test functions must vanish within 3 cells of the patch boundary; tau_grid
// must lie in (0, 0.5/h].  A function annihilated by P (denominator
// underflow) is skipped and counted, never divided by.
RatioCurve carleman_ratio(const LatticeOperator& P, const ScalarField& phi,
                          const std::vector<Eigen::VectorXd>& test_fns,
                          const std::vector<double>& tau_grid,
                          std::string test_family = "custom");

// Smooth product bumps with random centers and widths, supported at least
// 3 cells inside the patch and normalized to unit discrete L2.
std::vector<Eigen::VectorXd> random_bump_family(const GridDomain& dom, int count,
                                                std::uint64_t seed);

// Two columns, "tau,ratio", full precision.
std::string ratio_csv(const RatioCurve& curve);

}  // namespace carleman
