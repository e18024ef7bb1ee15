#include "carleman/control.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <utility>

#include <Eigen/Eigenvalues>

#include "carleman/util.hpp"

namespace carleman {

namespace {

bool axis_active(const GridDomain& dom, int a) {
  return a < dom.dim() && dom.counts()[a] > 1;
}

// Frame-wise vector-space helpers for space-time signals.
ControlSignal zeros_like(const ControlProblem& p) {
  ControlSignal s;
  s.dt = p.dt();
  s.frames.assign(std::size_t(p.steps()) + 1,
                  Eigen::VectorXd::Zero(p.domain().size()));
  return s;
}

void axpy(double a, const ControlSignal& x, ControlSignal& y) {
  for (std::size_t i = 0; i < y.frames.size(); ++i) y.frames[i] += a * x.frames[i];
}

void scale_add(ControlSignal& d, double beta, const ControlSignal& r) {
  // d = r + beta * d
  for (std::size_t i = 0; i < d.frames.size(); ++i)
    d.frames[i] = r.frames[i] + beta * d.frames[i];
}

void check_framing(const ControlProblem& p, const ControlSignal& f, const char* what) {
  if (f.steps() != p.steps() ||
      std::abs(f.dt - p.dt()) > 1e-12 * std::max(1.0, p.dt()))
    throw Error(ErrorCode::dimension,
                std::string(what) + " framing does not match the problem");
  for (const auto& frame : f.frames)
    if (std::size_t(frame.size()) != p.domain().size())
      throw Error(ErrorCode::dimension,
                  std::string(what) + " frame length does not match the grid");
}

// Adjoint of the forward map under the duality arrangement: the backward
// trace run from final data (b, -a) for a final pair (a, b).
ControlSignal forward_adjoint(const ControlProblem& p, const FinalPair& y) {
  return apply_FT_transpose(p, y.velocity, -y.state);
}

// Normal operator (F* F + alpha) f.
ControlSignal normal_apply(const ControlProblem& p, double alpha,
                           const ControlSignal& f) {
  ControlSignal out = forward_adjoint(p, apply_FT(p, f));
  axpy(alpha, f, out);
  return out;
}

// Conjugate gradient for the normal equations at a fixed weight, in the
// space-time inner product.  Returns the iteration count; throws when the
// cap is hit before the relative residual drops to tol.
int solve_normal(const ControlProblem& p, double alpha, const ControlSignal& b,
                 ControlSignal& x, double tol = 1e-10, int cap = 2000) {
  const double nb = std::sqrt(ts_inner(p, b, b));
  if (nb == 0.0) {
    x = zeros_like(p);
    return 0;
  }
  ControlSignal r = b;
  axpy(-1.0, normal_apply(p, alpha, x), r);
  ControlSignal d = r;
  double rs = ts_inner(p, r, r);
  int it = 0;
  // Badly conditioned regularized systems stall above tol at the roundoff
  // floor.  Accept the stalled iterate while the residual is still small
  // enough to leave the achieved-error evaluation trustworthy.
  double best = rs;
  int best_it = 0;
  const double floor_rel = 1e-4;
  while (std::sqrt(rs) > tol * nb) {
    const bool stalled = it - best_it > 100 && rs > 0.99 * best;
    if (it >= cap || stalled) {
      if (std::sqrt(rs) <= floor_rel * nb) return it;
      throw Error(ErrorCode::convergence,
                  "conjugate gradient hit the iteration cap; relative residual " +
                      format_exact(std::sqrt(rs) / nb));
    }
    const ControlSignal ad = normal_apply(p, alpha, d);
    const double dad = ts_inner(p, d, ad);
    if (!(dad > 0.0))
      throw Error(ErrorCode::numeric, "normal operator lost positive definiteness");
    const double step = rs / dad;
    axpy(step, d, x);
    axpy(-step, ad, r);
    const double rs_next = ts_inner(p, r, r);
    scale_add(d, rs_next / rs, r);
    rs = rs_next;
    ++it;
    if (rs < best) {
      best = rs;
      best_it = it;
    }
  }
  return it;
}

struct Attempt {
  ControlSignal f;
  double error = 0.0;
  double cost = 0.0;
};

Attempt evaluate(const ControlProblem& p, double alpha, const ControlSignal& b,
                 const FinalPair& y, const ControlSignal& warm, int& iterations) {
  Attempt a;
  a.f = warm;
  iterations += solve_normal(p, alpha, b, a.f);
  const FinalPair reached = apply_FT(p, a.f);
  const FinalPair gap{reached.state - y.state, reached.velocity - y.velocity};
  a.error = std::sqrt(pair_inner(p, gap, gap));
  a.cost = std::sqrt(ts_inner(p, a.f, a.f));
  return a;
}

}  // namespace

ControlProblem ControlProblem::make(const GridDomain& dom, Eigen::VectorXd chi,
                                    double T, int steps, Eigen::VectorXd target_state,
                                    Eigen::VectorXd target_velocity, double eps,
                                    double tikhonov, const ScalarField& q) {
  if (std::size_t(chi.size()) != dom.size())
    throw Error(ErrorCode::dimension, "cutoff length does not match the grid");
  if (std::size_t(target_state.size()) != dom.size() ||
      std::size_t(target_velocity.size()) != dom.size())
    throw Error(ErrorCode::dimension, "target length does not match the grid");
  if (!(T > 0.0)) throw Error(ErrorCode::config, "horizon must be positive");
  if (steps < 1) throw Error(ErrorCode::config, "need at least one time step");
  if (!(eps > 0.0)) throw Error(ErrorCode::config, "precision must be positive");
  if (tikhonov < 0.0)
    throw Error(ErrorCode::config, "regularization weight must be nonnegative");
  if (!chi.allFinite() || !target_state.allFinite() || !target_velocity.allFinite())
    throw Error(ErrorCode::numeric, "non-finite problem data");
  if (chi.minCoeff() < 0.0 || chi.maxCoeff() > 1.0)
    throw Error(ErrorCode::config, "cutoff must take values in [0, 1]");

  ControlProblem p(WaveOperator::make(dom, q));
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    if (!p.op_.interior(idx)) chi[idx] = 0.0;
  if (chi.maxCoeff() <= 0.0)
    throw Error(ErrorCode::config, "cutoff vanishes on the interior");
  p.omega_.assign(dom.size(), 0);
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    p.omega_[idx] = chi[idx] > 0.0 ? 1 : 0;
  p.chi_ = std::move(chi);
  p.T_ = T;
  p.steps_ = steps;
  if (p.op_.cfl(T / steps) > 0.95)
    throw Error(ErrorCode::config, "time step violates the stability bound");
  p.target_state_ = std::move(target_state);
  p.target_velocity_ = std::move(target_velocity);
  p.eps_ = eps;
  p.tikhonov_ = tikhonov;
  return p;
}

double ControlProblem::cell_volume() const {
  const auto hs = domain().spacing();
  double vol = 1.0;
  for (int a = 0; a < 3; ++a)
    if (axis_active(domain(), a)) vol *= hs[a];
  return vol;
}

ControlProblem ControlProblem::with_eps(double eps) const {
  if (!(eps > 0.0)) throw Error(ErrorCode::config, "precision must be positive");
  ControlProblem p = *this;
  p.eps_ = eps;
  return p;
}

Eigen::VectorXd interval_cutoff(const GridDomain& dom, const std::array<double, 3>& lo,
                                const std::array<double, 3>& hi) {
  for (int a = 0; a < 3; ++a)
    if (axis_active(dom, a) && !(lo[a] < hi[a]))
      throw Error(ErrorCode::config, "cutoff box is empty");
  Eigen::VectorXd chi(dom.size());
  for (std::size_t idx = 0; idx < dom.size(); ++idx) {
    const Eigen::VectorXd x = dom.point(idx);
    double v = 1.0;
    for (int a = 0; a < dom.dim(); ++a) {
      if (!axis_active(dom, a)) continue;
      const double s = (x[a] - 0.5 * (lo[a] + hi[a])) / (0.5 * (hi[a] - lo[a]));
      v *= s * s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
    }
    chi[idx] = v;
  }
  return chi;
}

FinalPair apply_FT(const ControlProblem& p, const ControlSignal& f) {
  check_framing(p, f, "control");
  const GridDomain& dom = p.domain();
  const double dt = p.dt();
  WaveState s{dom, Eigen::VectorXd::Zero(dom.size()), Eigen::VectorXd::Zero(dom.size()),
              0.0};
  Eigen::VectorXd g_now = p.chi().cwiseProduct(f.frames[0]);
  for (int n = 0; n < p.steps(); ++n) {
    Eigen::VectorXd g_next = p.chi().cwiseProduct(f.frames[std::size_t(n) + 1]);
    s = step_leapfrog(s, dt, p.op(), &g_now, &g_next);
    g_now = std::move(g_next);
  }
  return {std::move(s.u), std::move(s.v)};
}

ControlSignal apply_FT_transpose(const ControlProblem& p, const Eigen::VectorXd& w0,
                                 const Eigen::VectorXd& w1) {
  const GridDomain& dom = p.domain();
  if (std::size_t(w0.size()) != dom.size() || std::size_t(w1.size()) != dom.size())
    throw Error(ErrorCode::dimension, "final data length does not match the grid");
  ControlSignal trace;
  trace.dt = p.dt();
  trace.frames.assign(std::size_t(p.steps()) + 1, Eigen::VectorXd());
  WaveState s{dom, w0, w1, p.horizon()};
  trace.frames[std::size_t(p.steps())] = p.chi().cwiseProduct(s.u);
  for (int n = p.steps() - 1; n >= 0; --n) {
    s = step_leapfrog(s, -p.dt(), p.op());
    trace.frames[std::size_t(n)] = p.chi().cwiseProduct(s.u);
  }
  return trace;
}

double ts_inner(const ControlProblem& p, const ControlSignal& a,
                const ControlSignal& b) {
  check_framing(p, a, "signal");
  check_framing(p, b, "signal");
  const std::size_t last = a.frames.size() - 1;
  double acc = 0.5 * (a.frames[0].dot(b.frames[0]) + a.frames[last].dot(b.frames[last]));
  for (std::size_t n = 1; n < last; ++n) acc += a.frames[n].dot(b.frames[n]);
  return acc * p.dt() * p.cell_volume();
}

double pair_inner(const ControlProblem& p, const FinalPair& a, const FinalPair& b) {
  return p.cell_volume() * (a.state.dot(b.state) + a.velocity.dot(b.velocity));
}

ControlResult compute_control(const ControlProblem& p) {
  const FinalPair y{p.target_state(), p.target_velocity()};
  const double ny = std::sqrt(pair_inner(p, y, y));

  ControlResult res;
  res.f = zeros_like(p);
  res.alpha = p.tikhonov();
  if (ny == 0.0 || p.eps() >= 1.0) {
    res.achieved_error = ny;  // the zero control already meets the demand
    return res;
  }

  const ControlSignal b = forward_adjoint(p, y);
  const double nb2 = ts_inner(p, b, b);
  if (nb2 == 0.0)
    throw Error(ErrorCode::convergence,
                "target is invisible to the cutoff; best error " + format_exact(ny));

  if (p.tikhonov() > 0.0) {
    const Attempt a =
        evaluate(p, p.tikhonov(), b, y, zeros_like(p), res.iterations);
    res.f = a.f;
    res.achieved_error = a.error;
    res.cost = a.cost;
    return res;
  }

  // Bisection on the weight: the error grows with alpha, so hunt for the
  // largest alpha whose error still meets the demand.
  const double accept = p.eps() * ny;
  const FinalPair fb = apply_FT(p, b);
  double hi = std::max(pair_inner(p, fb, fb) / nb2, 1e-300);
  ControlSignal warm = zeros_like(p);
  bool have_best = false;
  Attempt best;
  double best_alpha = 0.0;

  Attempt cur = evaluate(p, hi, b, y, warm, res.iterations);
  warm = cur.f;
  if (cur.error <= accept) {
    // Passing already; push the weight up until it fails.
    best = cur;
    best_alpha = hi;
    have_best = true;
    for (int k = 0; k < 200 && cur.error <= accept; ++k) {
      best = cur;
      best_alpha = hi;
      hi *= 16.0;
      cur = evaluate(p, hi, b, y, warm, res.iterations);
      warm = cur.f;
    }
    // Bracket is [lo pass, hi fail]; tighten below.
    while (hi / best_alpha > 1.05) {
      const double mid = std::sqrt(best_alpha * hi);
      cur = evaluate(p, mid, b, y, warm, res.iterations);
      warm = cur.f;
      if (cur.error <= accept) {
        best = cur;
        best_alpha = mid;
      } else {
        hi = mid;
      }
    }
  } else {
    // Failing; walk the weight down until it passes, then tighten.
    double lo = hi;
    for (int k = 0; k < 200 && !have_best; ++k) {
      lo /= 16.0;
      if (lo < 1e-280)
        throw Error(ErrorCode::convergence,
                    "precision target unreachable; best error " +
                        format_exact(cur.error));
      cur = evaluate(p, lo, b, y, warm, res.iterations);
      warm = cur.f;
      if (cur.error <= accept) {
        best = cur;
        best_alpha = lo;
        have_best = true;
      } else {
        hi = lo;
      }
    }
    if (!have_best)
      throw Error(ErrorCode::convergence,
                  "precision target unreachable; best error " + format_exact(cur.error));
    while (hi / best_alpha > 1.05) {
      const double mid = std::sqrt(best_alpha * hi);
      cur = evaluate(p, mid, b, y, warm, res.iterations);
      warm = cur.f;
      if (cur.error <= accept) {
        best = cur;
        best_alpha = mid;
      } else {
        hi = mid;
      }
    }
  }

  res.f = best.f;
  res.achieved_error = best.error;
  res.cost = best.cost;
  res.alpha = best_alpha;
  return res;
}

Eigen::MatrixXd control_gram(const ControlProblem& p) {
  const GridDomain& dom = p.domain();
  std::vector<std::size_t> inner;
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    if (p.op().interior(idx)) inner.push_back(idx);
  const std::size_t m = inner.size();

  std::vector<ControlSignal> traces;
  traces.reserve(2 * m);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dom.size());
  for (std::size_t k = 0; k < 2 * m; ++k) {
    Eigen::VectorXd e = zero;
    e[inner[k % m]] = 1.0;
    traces.push_back(k < m ? apply_FT_transpose(p, e, zero)
                           : apply_FT_transpose(p, zero, e));
  }

  Eigen::MatrixXd G(2 * m, 2 * m);
  for (std::size_t j = 0; j < 2 * m; ++j)
    for (std::size_t k = j; k < 2 * m; ++k) {
      const double v = ts_inner(p, traces[j], traces[k]);
      G(j, k) = v;
      G(k, j) = v;
    }
  return G;
}

FinalPair graded_shadow_target(const ControlProblem& p,
                               const std::vector<double>& eps_ladder,
                               double depth_cap) {
  if (eps_ladder.size() < 2)
    throw Error(ErrorCode::config, "grading needs at least two precision values");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] > 0.0) || eps_ladder[i] >= 1.0)
      throw Error(ErrorCode::config, "precision values must lie in (0, 1)");
    if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))
      throw Error(ErrorCode::config, "precision ladder must strictly decrease");
  }
  if (!(depth_cap > 1.0))
    throw Error(ErrorCode::config, "depth cap must exceed 1");

  const GridDomain& dom = p.domain();
  std::vector<std::size_t> inner;
  for (std::size_t idx = 0; idx < dom.size(); ++idx)
    if (p.op().interior(idx)) inner.push_back(idx);
  const std::size_t m = inner.size();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(control_gram(p));
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::numeric, "duality Gram eigendecomposition failed");
  const Eigen::VectorXd lam = es.eigenvalues();
  const double lmax = lam[lam.size() - 1];
  if (!(lmax > 0.0))
    throw Error(ErrorCode::numeric, "duality Gram has no observable direction");

  // Depth of each eigenpair, shallowest first; depths past the double-
  // precision resolution of the Gram are unusable.
  std::vector<double> depth(std::size_t(lam.size()));
  for (std::size_t j = 0; j < depth.size(); ++j) {
    const double l = lam[lam.size() - 1 - Eigen::Index(j)];
    depth[j] = l > 0.0 ? -0.5 * std::log(l / lmax) : 1e300;
  }
  double deepest = 0.0;
  for (double a : depth)
    if (a < 14.5) deepest = std::max(deepest, a);
  const double cap = std::min(depth_cap, 0.92 * deepest);
  if (!(cap > 0.5))
    throw Error(ErrorCode::numeric,
                "observability ladder too shallow for a graded target");

  // Coefficient tails: after rung q the remaining mass is just under the
  // q-th precision demand, so that demand forces engagement of rung q+1.
  const std::size_t rungs = eps_ladder.size();
  std::vector<double> tail(rungs + 1, 0.0), coef(rungs + 1, 0.0), drag(rungs + 1, 0.0);
  tail[0] = 1.0;
  for (std::size_t q = 1; q < rungs; ++q) tail[q] = 0.85 * eps_ladder[q];
  for (std::size_t q = 1; q < rungs; ++q)
    coef[q] = std::sqrt(tail[q - 1] * tail[q - 1] - tail[q] * tail[q]);
  coef[rungs] = tail[rungs - 1];
  for (std::size_t q = 1; q <= rungs; ++q) drag[q] = -std::log(coef[q]);

  // Rung depths chosen so log(cost) ~ depth - drag comes out linear in the
  // reciprocal precision.
  const double x1 = 1.0 / eps_ladder[0];
  const double slope = (cap - 0.5 - drag[rungs]) / (1.0 / eps_ladder[rungs - 1] - x1);

  Eigen::VectorXd state = Eigen::VectorXd::Zero(dom.size());
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(dom.size());
  std::vector<std::size_t> used;
  for (std::size_t q = 1; q <= rungs; ++q) {
    const double want =
        0.5 + slope * (1.0 / eps_ladder[q - 1] - x1) + drag[q] - drag[1];
    std::size_t best = 0;
    double gap = 1e300;
    for (std::size_t j = 0; j < depth.size(); ++j) {
      if (std::find(used.begin(), used.end(), j) != used.end()) continue;
      const double d = std::abs(depth[j] - want);
      if (d < gap) {
        gap = d;
        best = j;
      }
    }
    used.push_back(best);
    const Eigen::VectorXd v =
        es.eigenvectors().col(lam.size() - 1 - Eigen::Index(best));
    // The Gram ranks final-data pairs as observation sources; the matching
    // expensive steering target is the duality image (-v1, v0).
    for (std::size_t j = 0; j < m; ++j) {
      state[Eigen::Index(inner[j])] -= coef[q] * v[Eigen::Index(m + j)];
      velocity[Eigen::Index(inner[j])] += coef[q] * v[Eigen::Index(j)];
    }
  }
  return FinalPair{std::move(state), std::move(velocity)};
}

std::vector<CostPoint> cost_curve(const ControlProblem& p,
                                  const std::vector<double>& eps_values, int threads) {
  if (eps_values.empty())
    throw Error(ErrorCode::config, "cost curve needs at least one precision value");
  std::vector<CostPoint> points(eps_values.size());
  const int workers =
      std::max(1, std::min<int>(threads, int(eps_values.size())));

  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
  auto run = [&](int w) {
    try {
      for (std::size_t i = std::size_t(w); i < eps_values.size();
           i += std::size_t(workers)) {
        const ControlResult r = compute_control(p.with_eps(eps_values[i]));
        points[i] = {eps_values[i], r.cost, r.achieved_error, r.iterations, r.alpha};
      }
    } catch (...) {
      failures[std::size_t(w)] = std::current_exception();
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
  return points;
}

std::string cost_csv(const std::vector<CostPoint>& points) {
  std::string out = "eps,cost,achieved_error,iterations\n";
  for (const auto& pt : points)
    out += format_exact(pt.eps) + "," + format_exact(pt.cost) + "," +
           format_exact(pt.achieved_error) + "," + std::to_string(pt.iterations) + "\n";
  return out;
}

}  // namespace carleman
