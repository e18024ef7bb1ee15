#include "carleman/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "carleman/util.hpp"

namespace carleman {

namespace {

// 3-point Gauss-Legendre on [a, b]; exact through degree 5, enough for the
// (triangle x quartic-mollifier) piecewise integrands below.
template <typename F>
double gl3(F&& f, double a, double b) {
  static const double node = std::sqrt(3.0 / 5.0);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  return half * ((5.0 / 9.0) * f(mid - half * node) + (8.0 / 9.0) * f(mid) +
                 (5.0 / 9.0) * f(mid + half * node));
}

double triangle(double z, double s1) {
  return std::max(0.0, 1.0 - std::abs(z) / s1);
}

double triangle_slope(double z, double s1) {
  if (std::abs(z) >= s1 || z == 0.0) return 0.0;
  return (z > 0.0) ? -1.0 / s1 : 1.0 / s1;
}

double mollifier(double y, double w) {
  if (std::abs(y) >= w) return 0.0;
  const double u = y / w;
  const double q = 1.0 - u * u;
  return (15.0 / (16.0 * w)) * q * q;
}

double mollifier_slope(double y, double w) {
  if (std::abs(y) >= w) return 0.0;
  const double u = y / w;
  return -(15.0 / (4.0 * w * w * w)) * y * (1.0 - u * u);
}

// Integrate f over [-w, w] split at the kink locations of the shifted
// triangle, so each Gauss panel sees a single polynomial piece.
template <typename F>
double split_integral(F&& f, double s, double s1, double w) {
  double cuts[5] = {-w, w, 0, 0, 0};
  int nc = 2;
  for (double c : {s - s1, s, s + s1})
    if (c > -w && c < w) cuts[nc++] = c;
  std::sort(cuts, cuts + nc);
  double acc = 0.0;
  for (int i = 0; i + 1 < nc; ++i) acc += gl3(f, cuts[i], cuts[i + 1]);
  return acc;
}

}  // namespace

BumpProfile BumpProfile::build(double slope_budget) {
  if (!(slope_budget > 1.0))
    throw Error(ErrorCode::config, "BumpProfile: slope budget must exceed 1");
  BumpProfile p;
  p.budget_ = slope_budget;
  p.s1_ = 1.0 / (0.98 * slope_budget);
  if (p.s1_ >= 1.0)
    throw Error(ErrorCode::config,
                "BumpProfile: slope budget too tight to fit the support in [-1, 1]");
  // Width small enough that renormalization keeps the slope under budget
  // (scale <= 1/0.98) and the support stays inside [-1, 1].
  p.width_ = std::min({0.05, 0.06 * p.s1_, 0.9 * (1.0 - p.s1_)});
  p.scale_ = 1.0;
  p.scale_ = 1.0 / p.value(0.0);
  return p;
}

double BumpProfile::value(double s) const {
  if (std::abs(s) >= s1_ + width_) return 0.0;
  auto f = [&](double y) { return triangle(s - y, s1_) * mollifier(y, width_); };
  return scale_ * split_integral(f, s, s1_, width_);
}

double BumpProfile::derivative(double s) const {
  if (std::abs(s) >= s1_ + width_) return 0.0;
  auto f = [&](double y) { return triangle_slope(s - y, s1_) * mollifier(y, width_); };
  return scale_ * split_integral(f, s, s1_, width_);
}

double BumpProfile::second_derivative(double s) const {
  if (std::abs(s) >= s1_ + width_) return 0.0;
  auto f = [&](double y) {
    return triangle_slope(s - y, s1_) * mollifier_slope(y, width_);
  };
  return scale_ * split_integral(f, s, s1_, width_);
}

double BumpProfile::slope_margin() const {
  double worst = 0.0;
  const int n = 10000;
  for (int i = 0; i <= n; ++i) {
    const double s = -1.0 + 2.0 * double(i) / double(n);
    worst = std::max(worst, std::abs(derivative(s)));
  }
  return budget_ - worst;
}

SweepFamily SweepFamily::make(double ell0, double t0, double alpha, double b,
                              double delta, int spatial_dim) {
  if (!(ell0 > 0.0) || !(t0 > 0.0))
    throw Error(ErrorCode::config, "SweepFamily: ell0 and t0 must be positive");
  if (!(alpha > 1.0))
    throw Error(ErrorCode::config, "SweepFamily: alpha must exceed 1");
  if (!(b > 0.0) || !(b < delta))
    throw Error(ErrorCode::config, "SweepFamily: need 0 < b < delta");
  if (spatial_dim < 2)
    throw Error(ErrorCode::dimension, "SweepFamily: spatial_dim must be >= 2");

  SweepFamily f;
  f.ell0 = ell0;
  f.t0 = t0;
  f.alpha = alpha;
  f.b = b;
  f.delta = delta;
  f.spatial_dim = spatial_dim;
  f.zeta = BumpProfile::build(alpha);

  // Dense-sample the profile invariants rather than trusting construction.
  const int n = 10000;
  double max_slope = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = -1.0 + 2.0 * double(i) / double(n);
    const double v = f.zeta.value(s);
    if (v < -1e-14)
      throw Error(ErrorCode::invariant, "SweepFamily: zeta takes a negative value");
    if (std::abs(v - f.zeta.value(-s)) > 1e-12)
      throw Error(ErrorCode::invariant, "SweepFamily: zeta is not even");
    max_slope = std::max(max_slope, std::abs(f.zeta.derivative(s)));
  }
  if (std::abs(f.zeta.value(0.0) - 1.0) > 1e-12 || f.zeta.value(1.0) != 0.0 ||
      f.zeta.value(-1.0) != 0.0)
    throw Error(ErrorCode::invariant, "SweepFamily: zeta endpoint values are off");
  if (max_slope > alpha)
    throw Error(ErrorCode::invariant, "SweepFamily: zeta slope exceeds alpha");
  return f;
}

PrincipalSymbol normal_form_symbol(int spatial_dim,
                                   std::vector<ExprPtr> m_prime_upper) {
  const int d = spatial_dim;
  if (d < 2) throw Error(ErrorCode::dimension, "normal_form_symbol: need dim >= 2");
  const int dw = d - 1;
  if (!m_prime_upper.empty() &&
      int(m_prime_upper.size()) != dw * (dw + 1) / 2)
    throw Error(ErrorCode::dimension,
                "normal_form_symbol: m' upper triangle has the wrong size");

  std::vector<ExprPtr> g;
  g.reserve(std::size_t(d) * (d + 1) / 2);
  std::size_t k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      if (i < dw && j < dw) {
        g.push_back(m_prime_upper.empty()
                        ? make_constant(i == j ? 1.0 : 0.0)
                        : m_prime_upper[k++]);
      } else if (i == dw && j == dw) {
        g.push_back(make_constant(1.0));
      } else {
        g.push_back(make_constant(0.0));
      }
    }
  return PrincipalSymbol::wave(d, std::move(g));
}

SweepReport build_sweep(const SweepFamily& family, const PrincipalSymbol& p,
                        const SweepGrid& grid) {
  const int d = family.spatial_dim;
  const int dw = d - 1;
  if (p.dim() != d + 1)
    throw Error(ErrorCode::dimension,
                "build_sweep: symbol dimension does not match the family");
  if (grid.eps_count < 2 || grid.nt < 3 || grid.nw < 3 || grid.nl < 2)
    throw Error(ErrorCode::config, "build_sweep: grid is too coarse");
  if (dw > 2)
    throw Error(ErrorCode::dimension, "build_sweep: at most two w-axes supported");

  // Flattened evaluation lattice over (t, w, l), masked to the disc rho <= 1.
  struct Node {
    Eigen::VectorXd x;  // ambient (t, w..., l)
    double rho;
  };
  std::vector<Node> nodes;
  const int nw1 = grid.nw;
  const int nw2 = (dw == 2) ? grid.nw : 1;
  nodes.reserve(std::size_t(grid.nt) * nw1 * nw2 * grid.nl);
  for (int it = 0; it < grid.nt; ++it) {
    const double t = -family.t0 + 2.0 * family.t0 * it / double(grid.nt - 1);
    for (int iw1 = 0; iw1 < nw1; ++iw1) {
      const double w1 = -family.b + 2.0 * family.b * iw1 / double(nw1 - 1);
      for (int iw2 = 0; iw2 < nw2; ++iw2) {
        const double w2 =
            (dw == 2) ? -family.b + 2.0 * family.b * iw2 / double(nw2 - 1) : 0.0;
        const double wsq = w1 * w1 + ((dw == 2) ? w2 * w2 : 0.0);
        const double rho2 = wsq / (family.b * family.b) +
                            (t * t) / (family.t0 * family.t0);
        if (rho2 > 1.0) continue;
        for (int il = 0; il < grid.nl; ++il) {
          const double l = family.ell0 * il / double(grid.nl - 1);
          Node nd;
          nd.x.resize(d + 1);
          nd.x[0] = t;
          nd.x[1] = w1;
          if (dw == 2) nd.x[2] = w2;
          nd.x[d] = l;
          nd.rho = std::sqrt(rho2);
          nodes.push_back(std::move(nd));
        }
      }
    }
  }

  SweepReport rep;
  rep.eta_pred = 1.0 - family.alpha * family.alpha * family.ell0 * family.ell0 /
                           (family.t0 * family.t0);
  rep.hypothesis_ok = family.alpha > 1.0 && family.alpha < family.t0 / family.ell0;
  rep.slope_margin = family.zeta.slope_margin();

  const double curvature0 = family.zeta.second_derivative(0.0);
  std::vector<double> cur(nodes.size()), prev;
  bool first = true;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int ie = 0; ie < grid.eps_count; ++ie) {
    const double eps = double(ie) / double(grid.eps_count - 1);
    rep.eps_grid.push_back(eps);

    parallel_chunks(nodes.size(), [&](std::size_t lo, std::size_t hi) {
      Eigen::VectorXd xi(d + 1);
      for (std::size_t i = lo; i < hi; ++i) {
        const Node& nd = nodes[i];
        // zeta'(rho)/rho extends continuously through rho = 0.
        const double k = (nd.rho < 1e-12)
                             ? curvature0
                             : family.zeta.derivative(nd.rho) / nd.rho;
        const double c = eps * family.ell0 * k;
        xi[0] = c * nd.x[0] / (family.t0 * family.t0);
        for (int a = 1; a <= dw; ++a) xi[a] = c * nd.x[a] / (family.b * family.b);
        xi[d] = -1.0;
        cur[i] = eval_p2(p, nd.x, xi);
      }
    });

    double mn = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (cur[i] < mn) {
        mn = cur[i];
        arg = i;
      }
    rep.margins.push_back(mn);
    if (mn < rep.min_margin) {
      rep.min_margin = mn;
      rep.worst.eps = eps;
      rep.worst.x = nodes[arg].x;
      rep.worst.value = mn;
    }
    if (!first) {
      rep.max_margin_jump =
          std::max(rep.max_margin_jump, std::abs(rep.margins[ie] - rep.margins[ie - 1]));
      double sens = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i)
        sens = std::max(sens, std::abs(cur[i] - prev[i]));
      rep.eps_sensitivity = std::max(rep.eps_sensitivity, sens);
    }
    prev = cur;
    first = false;
  }
  rep.noncharacteristic = rep.min_margin > 0.0;
  return rep;
}

}  // namespace carleman
