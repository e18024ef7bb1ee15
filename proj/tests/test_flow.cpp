#include <doctest.h>

#include <cmath>

#include "carleman/bicharacteristics.hpp"
#include "test_helpers.hpp"

using namespace carleman;

namespace {

// Spatial cometric with gentle variation; SPD on the whole test box.
PrincipalSymbol variable_wave() {
  auto g11 = parse("1 + 0.3*sin(x1)", 2);
  auto g12 = parse("0.1*x2", 2);
  auto g22 = parse("1.2 + 0.1*cos(x1 + x2)", 2);
  return PrincipalSymbol::wave(2, {g11, g12, g22});
}

}  // namespace

TEST_CASE("constant coefficients integrate exactly") {
  auto H = HamiltonSystem::quadratic(PrincipalSymbol::minkowski(2));
  Eigen::VectorXd x0(3), xi0(3);
  x0 << 0.2, -0.1, 0.4;
  xi0 << 1.0, 0.7, -0.3;
  const auto traj = integrate(H, x0, xi0, 1.0);
  REQUIRE(traj.samples.size() == 1001);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  A(0, 0) = -1.0;
  for (const auto& smp : traj.samples) {
    const Eigen::VectorXd exact_x = x0 + 2.0 * smp.s * (A * xi0);
    CHECK((smp.x - exact_x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((smp.xi - xi0).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("symbol value is conserved along variable-coefficient flow") {
  auto H = HamiltonSystem::quadratic(variable_wave());
  Eigen::VectorXd x0(3), xi0(3);
  x0 << 0.1, 0.3, -0.2;
  xi0 << 0.8, -0.5, 0.6;
  const auto traj = integrate(H, x0, xi0, 1.0);  // 1000 steps at 1e-3
  CHECK(traj.conservation_defect() <= 1e-8);

  // Backward runs conserve too.
  const auto back = integrate(H, x0, xi0, -1.0);
  CHECK(back.conservation_defect() <= 1e-8);
}

TEST_CASE("zero covector gives a stationary trajectory") {
  auto H = HamiltonSystem::quadratic(variable_wave());
  Eigen::VectorXd x0(3);
  x0 << 0.1, 0.3, -0.2;
  const auto traj = integrate(H, x0, Eigen::VectorXd::Zero(3), 0.1);
  for (const auto& smp : traj.samples) {
    CHECK((smp.x - x0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(smp.xi.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("time reversal returns to the start") {
  auto H = HamiltonSystem::quadratic(variable_wave());
  Eigen::VectorXd x0(3), xi0(3);
  x0 << 0.1, 0.3, -0.2;
  xi0 << 0.8, -0.5, 0.6;
  FlowOptions opt;
  opt.step = 5e-4;
  const auto fwd = integrate(H, x0, xi0, 1.0, opt);
  const auto& end = fwd.samples.back();
  const auto ret = integrate(H, end.x, end.xi, -1.0, opt);
  CHECK((ret.samples.back().x - x0).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((ret.samples.back().xi - xi0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("contact derivatives reproduce the symbolcalc brackets") {
  auto p = variable_wave();
  auto H = HamiltonSystem::quadratic(p);
  auto psi = parse("x1^2 + x2^2 - 1", 3, VarConvention::time_space);
  Eigen::VectorXd x0(3);
  x0 << 0.0, 1.0, 0.0;

  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd xi0 = rng.unit_vector(3);
    const auto traj = integrate(H, x0, xi0, 0.01);
    const auto rep = classify_tangency(traj, psi, x0);
    const auto s = bracket_suite(p, psi, x0, xi0, 0.0);
    CHECK(oracle::rel_err(rep.c_dot0, s.b1) < 1e-6);
    CHECK(oracle::rel_err(rep.c_ddot0, s.b2) < 1e-6);
    if (std::abs(s.b1) > 1e-8) {
      CHECK(rep.cls == TangencyClass::transversal);
    }
  }
}

TEST_CASE("linear vector field grazes the parabola from below") {
  // Transport along x1; the level set x2 = x1^2 curves away from the
  // trajectory, so the contact is concave and the curve stays in {psi <= 0}.
  auto H = HamiltonSystem::first_order({parse("1", 2), parse("0", 2)});
  auto psi = parse("x2 - x1^2", 2);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd xi0(2);
  xi0 << 1.0, 0.0;
  const auto traj = integrate(H, x0, xi0, 0.5);
  const auto rep = classify_tangency(traj, psi, x0);
  CHECK(std::abs(rep.c_dot0) < 1e-10);
  CHECK(rep.c_ddot0 == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(rep.cls == TangencyClass::concave_tangent);
  for (const auto& smp : traj.samples) CHECK(eval_value(psi, smp.x) <= 1e-12);
}

TEST_CASE("rotating vector field transports its covector") {
  // v = (-x2, x1): circular flow; p = -x2 xi1 + x1 xi2 is conserved.
  auto H = HamiltonSystem::first_order({parse("0 - x2", 2), parse("x1", 2)});
  Eigen::VectorXd x0(2), xi0(2);
  x0 << 1.0, 0.0;
  xi0 << 0.3, -0.7;
  FlowOptions opt;
  opt.step = 2.0 * M_PI / 4000.0;  // whole number of steps per revolution
  const auto traj = integrate(H, x0, xi0, 2.0 * M_PI, opt);
  CHECK(traj.conservation_defect() <= 1e-10);
  // Full revolution: position and covector return.
  CHECK((traj.samples.back().x - x0).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((traj.samples.back().xi - xi0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("null tangent covector on the subcritical hyperboloid is convex") {
  auto p = PrincipalSymbol::minkowski(2);
  auto H = HamiltonSystem::quadratic(p);
  auto psi = parse("x1^2 + x2^2 - 0.25*t^2", 3, VarConvention::time_space);
  Eigen::VectorXd x0(3);
  x0 << 1.0, 0.5, 0.0;
  // Null covector tangent to the level set: p2 = 0 and b1 = 0 by hand:
  // xi = (1, -1/2, sqrt(3)/2) has -1 + 1/4 + 3/4 = 0 and
  // b1 = 2(0.5 xi_t + xi_1) = 0.
  Eigen::VectorXd xi0(3);
  xi0 << 1.0, -0.5, std::sqrt(3.0) / 2.0;
  const auto traj = integrate(H, x0, xi0, 0.01);
  const auto rep = classify_tangency(traj, psi, x0);
  CHECK(rep.cls == TangencyClass::convex_tangent);
  // b2 = 8(|xi_x|^2 - g^2 xi_t^2) = 8(1 - 1/4) = 6.
  CHECK(rep.c_ddot0 == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("finite differences along the path match the analytic contact data") {
  auto p = variable_wave();
  auto H = HamiltonSystem::quadratic(p);
  auto psi = parse("x1^2 + x2^2 - 1", 3, VarConvention::time_space);
  Eigen::VectorXd x0(3), xi0(3);
  x0 << 0.2, 1.0, 0.0;
  // Base point sits on {psi = psi(base)} trivially; use a generic covector.
  xi0 << 0.4, 0.9, -0.2;
  const auto traj = integrate(H, x0, xi0, 0.02);
  const auto rep = classify_tangency(traj, psi, x0);
  // Central differences of c(s) from the sampled path, independent of the
  // one-sided stencil inside classify_tangency.
  auto c = [&](std::size_t i) { return eval_value(psi, traj.samples[i].x); };
  const double h = traj.step;
  const double d1 = (-3.0 * c(0) + 4.0 * c(1) - c(2)) / (2.0 * h);
  const double d2 = (2.0 * c(0) - 5.0 * c(1) + 4.0 * c(2) - c(3)) / (h * h);
  CHECK(oracle::rel_err(d1, rep.c_dot0) < 1e-5);
  CHECK(oracle::rel_err(d2, rep.c_ddot0) < 1e-3);
}

TEST_CASE("flow error handling") {
  auto H = HamiltonSystem::quadratic(PrincipalSymbol::minkowski(2));
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd xi0(3);
  xi0 << 1.0, 0.0, 0.0;

  FlowOptions bad_step;
  bad_step.step = 0.0;
  CHECK_THROWS_AS(integrate(H, x0, xi0, 1.0, bad_step), Error);

  CHECK_THROWS_AS(integrate(H, Eigen::VectorXd::Zero(2), xi0, 1.0), Error);

  FlowOptions tight;
  tight.box_halfwidth = 0.5;
  CHECK_THROWS_AS(integrate(H, x0, xi0, 1.0, tight), Error);

  // Off-surface start for tangency classification.
  auto psi = parse("x1^2 + x2^2 - 1", 3, VarConvention::time_space);
  const auto traj = integrate(H, x0, xi0, 0.01);
  Eigen::VectorXd base(3);
  base << 0.0, 1.0, 0.0;
  CHECK_THROWS_AS(classify_tangency(traj, psi, base), Error);
}

TEST_CASE("trajectory CSV export") {
  auto H = HamiltonSystem::quadratic(PrincipalSymbol::minkowski(1));
  Eigen::VectorXd x0(2), xi0(2);
  x0 << 0.0, 0.0;
  xi0 << 1.0, 1.0;
  const auto traj = integrate(H, x0, xi0, 0.01);
  const std::string csv = trajectory_csv(traj, VarConvention::time_space);
  CHECK(csv.rfind("s,t,x1,xi_t,xi_x1,p\n", 0) == 0);
  // One header plus one line per sample.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + traj.samples.size());
}
