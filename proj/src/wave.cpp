#include "carleman/wave.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "carleman/util.hpp"

namespace carleman {

namespace {

// A node is interior when it is inside the mask and off every box face of an
// active axis; everything else is pinned to zero.
std::vector<std::uint8_t> interior_flags(const GridDomain& dom) {
  std::vector<std::uint8_t> flags(dom.size(), 0);
  const auto& n = dom.counts();
  for (std::size_t idx = 0; idx < dom.size(); ++idx) {
    if (!dom.masked(idx)) continue;
    const auto c = dom.coords(idx);
    bool edge = false;
    for (int a = 0; a < dom.dim(); ++a)
      if (c[a] == 0 || c[a] == n[a] - 1) edge = true;
    flags[idx] = edge ? 0 : 1;
  }
  return flags;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
// three-term recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

}  // namespace

WaveState make_wave_state(
    const GridDomain& dom,
    const std::function<double(const Eigen::VectorXd&)>& u0,
    const std::function<double(const Eigen::VectorXd&)>& u1) {
  const auto flags = interior_flags(dom);
  WaveState s{dom, Eigen::VectorXd::Zero(dom.size()),
              Eigen::VectorXd::Zero(dom.size()), 0.0};
  for (std::size_t idx = 0; idx < dom.size(); ++idx) {
    if (!flags[idx]) continue;
    const Eigen::VectorXd x = dom.point(idx);
    if (u0) s.u[idx] = u0(x);
    if (u1) s.v[idx] = u1(x);
  }
  if (!s.u.allFinite() || !s.v.allFinite())
    throw Error(ErrorCode::numeric, "wave state: non-finite initial data");
  return s;
}

WaveOperator WaveOperator::make(const GridDomain& dom, const ScalarField& q) {
  WaveOperator op(dom);
  op.interior_ = interior_flags(dom);
  op.q_ = Eigen::VectorXd::Zero(dom.size());

  const auto& n = dom.counts();
  const auto h = dom.spacing();
  op.h_min_ = 1e300;
  for (int a = 0; a < dom.dim(); ++a)
    if (n[a] > 1) op.h_min_ = std::min(op.h_min_, h[a]);

  // Node metrics once; faces get the average of their two endpoints.
  std::vector<Eigen::MatrixXd> g(dom.size());
  op.c_max_ = 0.0;
  for (std::size_t idx = 0; idx < dom.size(); ++idx) {
    g[idx] = dom.metric_at(dom.point(idx));
    if (!dom.masked(idx)) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g[idx]);
    op.c_max_ = std::max(op.c_max_, std::sqrt(es.eigenvalues().maxCoeff()));
    if (q && op.interior_[idx]) {
      op.q_[idx] = eval_value(q, dom.point(idx));
      if (!std::isfinite(op.q_[idx]))
        throw Error(ErrorCode::numeric, "wave operator: non-finite potential");
    }
  }

  const std::array<std::size_t, 3> stride = {std::size_t(n[1]) * n[2],
                                             std::size_t(n[2]), 1};
  for (int a = 0; a < dom.dim(); ++a) {
    if (n[a] <= 1) continue;
    op.face_[a].assign(dom.size(), 0.0);
    for (std::size_t idx = 0; idx < dom.size(); ++idx) {
      const auto c = dom.coords(idx);
      if (c[a] + 1 >= n[a]) continue;
      op.face_[a][idx] = 0.5 * (g[idx](a, a) + g[idx + stride[a]](a, a));
    }
  }
  if (dom.dim() >= 2 && !dom.identity_metric()) {
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int p = 0; p < 3; ++p) {
      const int a = pairs[p][0], b = pairs[p][1];
      if (b >= dom.dim()) continue;
      op.cross_[p].assign(dom.size(), 0.0);
      for (std::size_t idx = 0; idx < dom.size(); ++idx)
        op.cross_[p][idx] = g[idx](a, b);
    }
  }
  return op;
}

void WaveOperator::apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  if (std::size_t(u.size()) != dom_.size())
    throw Error(ErrorCode::dimension, "wave operator: state size mismatch");
  out.setZero(u.size());
  const auto& n = dom_.counts();
  const auto h = dom_.spacing();
  const std::array<std::ptrdiff_t, 3> stride = {std::ptrdiff_t(n[1]) * n[2],
                                                std::ptrdiff_t(n[2]), 1};
  const std::size_t total = dom_.size();

  // Values are read through the interior projection so the assembled matrix
  // is exactly symmetric no matter what callers leave on pinned rows.
  auto val = [&](std::ptrdiff_t idx) {
    return interior_[std::size_t(idx)] ? u[idx] : 0.0;
  };

  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!interior_[idx]) continue;
    const auto c = dom_.coords(idx);
    const double ui = u[idx];
    double acc = q_[idx] * ui;

    for (int a = 0; a < dom_.dim(); ++a) {
      if (n[a] <= 1) continue;
      const std::ptrdiff_t s = stride[a];
      // Interior nodes always have both neighbours inside the box.
      const double up = val(std::ptrdiff_t(idx) + s);
      const double um = val(std::ptrdiff_t(idx) - s);
      const double fp = face_[a][idx];
      const double fm = face_[a][idx - s];
      acc -= (fp * (up - ui) - fm * (ui - um)) / (h[a] * h[a]);
    }

    if (dom_.dim() >= 2) {
      const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
      for (int p = 0; p < 3; ++p) {
        if (cross_[p].empty()) continue;
        const int a = pairs[p][0], b = pairs[p][1];
        const std::ptrdiff_t sa = stride[a], sb = stride[b];
        // 0.5 * [D_a(g_ab D_b u) + D_b(g_ab D_a u)] * 2, centered, with the
        // operand read as zero outside the box.
        auto dcent = [&](std::ptrdiff_t at, std::ptrdiff_t s, int axis, int ca) {
          const double vp = (ca + 1 < n[axis]) ? val(at + s) : 0.0;
          const double vm = (ca - 1 >= 0) ? val(at - s) : 0.0;
          return (vp - vm) / (2.0 * h[axis]);
        };
        const std::ptrdiff_t i = std::ptrdiff_t(idx);
        if (c[a] + 1 < n[a] && c[a] >= 1) {
          const double tp = cross_[p][idx + sa] * dcent(i + sa, sb, b, c[b]);
          const double tm = cross_[p][idx - sa] * dcent(i - sa, sb, b, c[b]);
          acc -= (tp - tm) / (2.0 * h[a]);
        }
        if (c[b] + 1 < n[b] && c[b] >= 1) {
          const double tp = cross_[p][idx + sb] * dcent(i + sb, sa, a, c[a]);
          const double tm = cross_[p][idx - sb] * dcent(i - sb, sa, a, c[a]);
          acc -= (tp - tm) / (2.0 * h[b]);
        }
      }
    }
    out[idx] = acc;
  }
}

Eigen::VectorXd WaveOperator::apply(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out;
  apply(u, out);
  return out;
}

WaveState step_leapfrog(const WaveState& s, double dt, const WaveOperator& op,
                        const Eigen::VectorXd* forcing_now,
                        const Eigen::VectorXd* forcing_next) {
  if (op.cfl(dt) > 0.95)
    throw Error(ErrorCode::config, "step_leapfrog: CFL number above 0.95");
  if (!s.u.allFinite() || !s.v.allFinite())
    throw Error(ErrorCode::numeric, "step_leapfrog: non-finite state");

  const std::size_t total = std::size_t(s.u.size());
  auto accel = [&](const Eigen::VectorXd& u, const Eigen::VectorXd* f,
                   Eigen::VectorXd& a) {
    op.apply(u, a);
    a = -a;
    if (f) {
      if (std::size_t(f->size()) != total)
        throw Error(ErrorCode::dimension, "step_leapfrog: forcing size mismatch");
      for (std::size_t i = 0; i < total; ++i)
        if (op.interior(i)) a[i] += (*f)[i];
    }
  };

  Eigen::VectorXd a_now, a_next;
  accel(s.u, forcing_now, a_now);

  WaveState next = s;
  next.u = s.u + dt * s.v + (0.5 * dt * dt) * a_now;
  accel(next.u, forcing_next, a_next);
  next.v = s.v + (0.5 * dt) * (a_now + a_next);
  next.time = s.time + dt;
  return next;
}

double wave_energy(const WaveState& s, const WaveOperator& op, double dt) {
  const auto& n = s.dom.counts();
  const auto h = s.dom.spacing();
  double vol = 1.0;
  for (int a = 0; a < s.dom.dim(); ++a)
    if (n[a] > 1) vol *= h[a];
  const Eigen::VectorXd lu = op.apply(s.u);
  return vol * (0.5 * s.v.squaredNorm() + 0.5 * s.u.dot(lu) -
                (dt * dt / 8.0) * lu.squaredNorm());
}

double dalembert_oracle(const std::function<double(double)>& u0,
                        const std::function<double(double)>& u1, double t,
                        double x) {
  double value = 0.0;
  if (u0) value += 0.5 * (u0(x - t) + u0(x + t));
  if (u1) {
    static const auto rule = [] {
      std::pair<std::vector<double>, std::vector<double>> r;
      gauss_legendre(64, r.first, r.second);
      return r;
    }();
    const double mid = x, rad = t;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.first.size(); ++i)
      acc += rule.second[i] * u1(mid + rad * rule.first[i]);
    value += 0.5 * rad * acc;
  }
  return value;
}

double kirchhoff_oracle(const std::function<double(const Eigen::Vector3d&)>& u1,
                        double t, const Eigen::Vector3d& x, int quad_order) {
  if (!(t > 0.0)) throw Error(ErrorCode::domain, "kirchhoff: time must be positive");
  if (quad_order < 17)
    throw Error(ErrorCode::config, "kirchhoff: quadrature order below 17");

  const int n_mu = (quad_order + 2) / 2;  // Gauss in cos(theta)
  const int n_phi = quad_order + 1;       // equispaced in phi
  std::vector<double> mu, wmu;
  gauss_legendre(n_mu, mu, wmu);

  double acc = 0.0;
  for (int j = 0; j < n_mu; ++j) {
    const double c = mu[j], s = std::sqrt(std::max(0.0, 1.0 - c * c));
    double ring = 0.0;
    for (int m = 0; m < n_phi; ++m) {
      const double phi = 2.0 * M_PI * m / n_phi;
      const Eigen::Vector3d sigma(s * std::cos(phi), s * std::sin(phi), c);
      ring += u1(x - t * sigma);
    }
    acc += wmu[j] * ring;
  }
  // (t / 4 pi) * (2 pi / n_phi) * sum = t / (2 n_phi) * sum.
  return t * acc / (2.0 * n_phi);
}

FiniteSpeedReport finite_speed_check(const WaveState& initial,
                                     const WaveOperator& op, double dt,
                                     int steps, double r0, double kappa) {
  FiniteSpeedReport rep;
  rep.r0 = r0;
  rep.slack_cells = kappa;
  rep.data_norm = std::max(initial.u.lpNorm<Eigen::Infinity>(),
                           initial.v.lpNorm<Eigen::Infinity>());

  const auto h = initial.dom.spacing();
  double h_max = 0.0;
  for (int a = 0; a < initial.dom.dim(); ++a)
    if (initial.dom.counts()[a] > 1) h_max = std::max(h_max, h[a]);

  WaveState s = initial;
  auto scan = [&](const WaveState& state, double elapsed) {
    const double radius = r0 - op.max_speed() * elapsed - kappa * h_max;
    if (radius <= 0.0) return;
    for (std::size_t idx = 0; idx < state.dom.size(); ++idx) {
      if (!op.interior(idx)) continue;
      if (state.dom.point(idx).norm() > radius) continue;
      ++rep.cone_samples;
      rep.max_in_cone = std::max(rep.max_in_cone, std::abs(state.u[idx]));
    }
  };
  scan(s, 0.0);
  for (int k = 1; k <= steps; ++k) {
    s = step_leapfrog(s, dt, op);
    scan(s, k * dt);
  }
  rep.ok = rep.max_in_cone <= 1e-8 * rep.data_norm;
  return rep;
}

}  // namespace carleman
