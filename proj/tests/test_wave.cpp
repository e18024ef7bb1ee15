#include <doctest.h>

#include <cmath>
#include <vector>

#include "carleman/util.hpp"
#include "carleman/wave.hpp"

using namespace carleman;

namespace {

// Smooth compactly supported profile on (-1, 1).
double bump(double s) {
  return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
}

GridDomain line(int n, double a = -2.0, double b = 2.0) {
  return GridDomain::make(1, {a, 0, 0}, {b, 0, 0}, {n, 1, 1});
}

double grid_l2(const GridDomain& dom, const Eigen::VectorXd& e) {
  return std::sqrt(e.squaredNorm() * dom.spacing()[0]);
}

}  // namespace

TEST_CASE("zero data and zero forcing stay identically zero") {
  const GridDomain dom = line(101);
  const WaveOperator op = WaveOperator::make(dom);
  WaveState s = make_wave_state(dom, nullptr, nullptr);
  for (int k = 0; k < 50; ++k) s = step_leapfrog(s, 0.9 * dom.spacing()[0], op);
  CHECK(s.u.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(s.v.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("free line wave converges to the translation solution at order two") {
  auto u0 = [](const Eigen::VectorXd& x) { return bump(x[0] / 0.8); };
  auto u1 = [](const Eigen::VectorXd& x) { return bump((x[0] - 0.1) / 0.7); };
  const double t_end = 0.5, cfl = 0.78125;

  struct Fixture {
    std::function<double(const Eigen::VectorXd&)> f0, f1;
    std::function<double(double)> g0, g1;
  };
  const std::vector<Fixture> fixtures = {
      {u0, nullptr, [](double s) { return bump(s / 0.8); }, nullptr},
      {nullptr, u1, nullptr, [](double s) { return bump((s - 0.1) / 0.7); }}};

  for (const auto& fx : fixtures) {
    std::vector<double> errs;
    for (int n : {101, 201, 401}) {
      const GridDomain dom = line(n);
      const WaveOperator op = WaveOperator::make(dom);
      const double dt = cfl * dom.spacing()[0];
      const int steps = int(std::lround(t_end / dt));
      REQUIRE(std::abs(steps * dt - t_end) < 1e-12);

      WaveState s = make_wave_state(dom, fx.f0, fx.f1);
      for (int k = 0; k < steps; ++k) s = step_leapfrog(s, dt, op);

      Eigen::VectorXd err = Eigen::VectorXd::Zero(dom.size());
      for (std::size_t i = 0; i < dom.size(); ++i) {
        const double x = dom.point(i)[0];
        if (std::abs(x) > 1.9) continue;
        err[i] = s.u[i] - dalembert_oracle(fx.g0, fx.g1, t_end, x);
      }
      errs.push_back(grid_l2(dom, err));
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
      const double slope = std::log2(errs[i] / errs[i + 1]);
      CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
    }
  }
}

TEST_CASE("standing mode returns after one period") {
  const int n = 401;
  const GridDomain dom = line(n, 0.0, 1.0);
  const WaveOperator op = WaveOperator::make(dom);
  const double h = dom.spacing()[0];
  const int steps = int(std::ceil(2.0 / (0.95 * h)));
  const double dt = 2.0 / steps;
  REQUIRE(op.cfl(dt) <= 0.95);

  WaveState s = make_wave_state(
      dom, [](const Eigen::VectorXd& x) { return std::sin(M_PI * x[0]); }, nullptr);
  const Eigen::VectorXd start = s.u;
  for (int k = 0; k < steps; ++k) s = step_leapfrog(s, dt, op);
  CHECK((s.u - start).lpNorm<Eigen::Infinity>() < 1e-4);
}

TEST_CASE("discrete energy is flat over a thousand steps") {
  const GridDomain dom = GridDomain::make(
      1, {-2, 0, 0}, {2, 0, 0}, {201, 1, 1}, {parse("1 + 0.3*sin(3*x1)", 1)});
  const WaveOperator op = WaveOperator::make(dom, parse("0.5 + 0.2*cos(x1)", 1));
  WaveState s = make_wave_state(
      dom, [](const Eigen::VectorXd& x) { return bump(x[0] / 0.9); },
      [](const Eigen::VectorXd& x) { return bump((x[0] - 0.3) / 0.5); });
  const double dt = 0.9 * op.min_spacing() / op.max_speed();
  const double e0 = wave_energy(s, op, dt);
  REQUIRE(e0 > 0.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = step_leapfrog(s, dt, op);
    worst = std::max(worst, std::abs(wave_energy(s, op, dt) - e0));
  }
  CHECK(worst <= 1e-6 * e0);
}

TEST_CASE("energy stays flat under a full two dimensional metric") {
  const GridDomain dom = GridDomain::make(
      2, {-1, -1, 0}, {1, 1, 0}, {61, 61, 1},
      {parse("1.3 + 0.2*sin(x1)", 2), parse("0.1*cos(x1 + x2)", 2),
       parse("1.1 + 0.2*cos(x2)", 2)});
  const WaveOperator op = WaveOperator::make(dom, parse("0.3 + 0.1*x1*x1", 2));
  WaveState s = make_wave_state(
      dom,
      [](const Eigen::VectorXd& x) { return bump(x[0] / 0.7) * bump(x[1] / 0.7); },
      nullptr);
  // Two-dimensional stability needs dt <= h / (c sqrt(2)); keep some margin.
  const double dt = 0.45 * op.min_spacing() / op.max_speed();
  const double e0 = wave_energy(s, op, dt);
  REQUIRE(e0 > 0.0);
  for (int k = 0; k < 200; ++k) s = step_leapfrog(s, dt, op);
  CHECK(std::abs(wave_energy(s, op, dt) - e0) <= 1e-6 * e0);
}

TEST_CASE("leapfrog runs backward to its starting data") {
  const GridDomain dom = GridDomain::make(
      2, {-1, -1, 0}, {1, 1, 0}, {41, 41, 1},
      {parse("1.2 + 0.1*sin(x1)", 2), parse("0.1*cos(x1 + x2)", 2),
       parse("1.0 + 0.1*cos(x2)", 2)});
  const WaveOperator op = WaveOperator::make(dom, parse("0.2 + 0.1*x2", 2));
  const WaveState start = make_wave_state(
      dom,
      [](const Eigen::VectorXd& x) { return bump(x[0] / 0.6) * bump(x[1] / 0.8); },
      [](const Eigen::VectorXd& x) { return bump((x[0] + 0.2) / 0.5); });
  const double dt = 0.45 * op.min_spacing() / op.max_speed();

  WaveState s = start;
  for (int k = 0; k < 200; ++k) s = step_leapfrog(s, dt, op);
  for (int k = 0; k < 200; ++k) s = step_leapfrog(s, -dt, op);
  CHECK((s.u - start.u).norm() <= 1e-8 * start.u.norm());
  CHECK((s.v - start.v).norm() <= 1e-8 * (1.0 + start.v.norm()));
  CHECK(s.time == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("disturbances stay out of the shrinking cone") {
  SUBCASE("line") {
    const GridDomain dom = line(161);
    const WaveOperator op = WaveOperator::make(dom);
    const WaveState s = make_wave_state(
        dom,
        [](const Eigen::VectorXd& x) {
          return bump((std::abs(x[0]) - 1.1) / 0.4);
        },
        nullptr);
    const auto rep = finite_speed_check(s, op, 0.9 * 0.025, 20, 0.5);
    CHECK(rep.ok);
    CHECK(rep.cone_samples > 0);
    CHECK(rep.data_norm > 0.1);
    CHECK(rep.max_in_cone < 1e-10);
  }
  SUBCASE("plane, radial data") {
    const GridDomain dom =
        GridDomain::make(2, {-2, -2, 0}, {2, 2, 0}, {81, 81, 1});
    const WaveOperator op = WaveOperator::make(dom);
    const WaveState s = make_wave_state(
        dom,
        [](const Eigen::VectorXd& x) { return bump((x.norm() - 1.1) / 0.4); },
        nullptr);
    const auto rep = finite_speed_check(s, op, 0.45 * 0.05, 16, 0.5);
    CHECK(rep.ok);
    CHECK(rep.cone_samples > 0);
    CHECK(rep.max_in_cone <= 1e-8 * rep.data_norm);
  }
}

TEST_CASE("a point disturbance expands at most one cell per step") {
  const GridDomain dom = GridDomain::make(
      2, {-1, -1, 0}, {1, 1, 0}, {41, 41, 1},
      {parse("1.2 + 0.1*sin(x1)", 2), parse("0.15*cos(x1 + x2)", 2),
       parse("1.0 + 0.1*x2*x2", 2)});
  const WaveOperator op = WaveOperator::make(dom);
  WaveState s = make_wave_state(dom, nullptr, nullptr);
  const int c = 20;
  s.u[dom.index(c, c)] = 1.0;
  const double dt = 0.45 * op.min_spacing() / op.max_speed();
  for (int step = 1; step <= 6; ++step) {
    s = step_leapfrog(s, dt, op);
    for (int i = 0; i < 41; ++i)
      for (int j = 0; j < 41; ++j)
        if (std::max(std::abs(i - c), std::abs(j - c)) > step)
          CHECK(s.u[dom.index(i, j)] == 0.0);
  }
}

TEST_CASE("line oracle reproduces closed forms") {
  // Quadratic data: the average of translates is x^2 + t^2.
  const double q = dalembert_oracle([](double s) { return s * s; }, nullptr, 0.7, 0.3);
  CHECK(q == doctest::Approx(0.3 * 0.3 + 0.7 * 0.7).epsilon(1e-14));
  // Velocity data cos: antiderivative gives (sin(x+t) - sin(x-t)) / 2.
  const double v = dalembert_oracle(nullptr, [](double s) { return std::cos(s); },
                                    0.9, -0.4);
  CHECK(v == doctest::Approx(0.5 * (std::sin(0.5) - std::sin(-1.3))).epsilon(1e-13));
}

TEST_CASE("spherical mean oracle matches closed forms and support bounds") {
  auto ball_bump = [](const Eigen::Vector3d& y) { return bump(y.norm() / 0.3); };

  SUBCASE("constant integrand") {
    const double val =
        kirchhoff_oracle([](const Eigen::Vector3d&) { return 1.0; }, 2.7,
                         Eigen::Vector3d(0.4, -1.0, 0.2));
    CHECK(val == doctest::Approx(2.7).epsilon(1e-13));
  }
  SUBCASE("gaussian radial closed form") {
    const double t = 1.2;
    const Eigen::Vector3d x(0.5, 0.3, -0.2);
    const double rho = x.norm();
    const double expect =
        std::exp(-(rho * rho + t * t)) * std::sinh(2.0 * t * rho) / (2.0 * rho);
    const double val = kirchhoff_oracle(
        [](const Eigen::Vector3d& y) { return std::exp(-y.squaredNorm()); }, t, x);
    CHECK(val == doctest::Approx(expect).epsilon(1e-11));
  }
  SUBCASE("quiet before and after the shell passes") {
    CHECK(kirchhoff_oracle(ball_bump, 1.0, Eigen::Vector3d(2.0, 0.0, 0.0)) == 0.0);
    CHECK(kirchhoff_oracle(ball_bump, 1.0, Eigen::Vector3d(0.2, 0.0, 0.0)) == 0.0);
    CHECK(kirchhoff_oracle(ball_bump, 1.0, Eigen::Vector3d(1.0, 0.0, 0.0)) > 0.0);
  }
  SUBCASE("rejects bad arguments") {
    CHECK_THROWS_WITH_AS(
        kirchhoff_oracle(ball_bump, 0.0, Eigen::Vector3d::Zero()),
        doctest::Contains("positive"), Error);
    CHECK_THROWS_WITH_AS(
        kirchhoff_oracle(ball_bump, 1.0, Eigen::Vector3d::Zero(), 16),
        doctest::Contains("order"), Error);
  }
}

TEST_CASE("stepping rejects unstable or broken configurations") {
  const GridDomain dom = line(101);
  const WaveOperator op = WaveOperator::make(dom);
  WaveState s = make_wave_state(
      dom, [](const Eigen::VectorXd& x) { return bump(x[0]); }, nullptr);
  CHECK_THROWS_WITH_AS(step_leapfrog(s, 2.0 * dom.spacing()[0], op),
                       doctest::Contains("CFL"), Error);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(7);
  CHECK_THROWS_WITH_AS(step_leapfrog(s, 0.5 * dom.spacing()[0], op, &f),
                       doctest::Contains("size"), Error);
  s.u[50] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(step_leapfrog(s, 0.5 * dom.spacing()[0], op),
                       doctest::Contains("finite"), Error);
}
