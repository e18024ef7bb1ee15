#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "carleman/ratio.hpp"
#include "carleman/util.hpp"

using namespace carleman;

namespace {

// The shared 1D patch: [-0.3, 0.3] at spacing 1/400, admissible tau up to 200.
GridDomain patch() {
  return GridDomain::make(1, {-0.3, 0, 0}, {0.3, 0, 0}, {241, 1, 1});
}

// Geometric tau grid from lo to hi inclusive, successive points a factor
// sqrt(2) apart.  Starting at 8 keeps the grid inside the regime where a
// valid weighted inequality has settled onto its plateau.
std::vector<double> tau_grid(double lo, double hi) {
  std::vector<double> taus;
  for (double t = lo; t < hi; t *= std::sqrt(2.0)) taus.push_back(t);
  taus.push_back(hi);
  return taus;
}

// The ratio quotient written out longhand with unshifted weights, used both
// as an independent oracle and to step outside the admissible tau range.
double longhand_ratio(const LatticeOperator& P, const ExprPtr& phi, double tau,
                      const Eigen::VectorXd& u) {
  const GridDomain& dom = P.domain();
  const double h = dom.spacing()[0];
  Eigen::VectorXd w(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i)
    w[i] = std::exp(tau * eval_value(phi, dom.point(i)));
  Eigen::VectorXd pu = P.apply(u);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i + 1 < dom.size(); ++i) {
    const double du = (u[i + 1] - u[i - 1]) / (2.0 * h);
    num += tau * tau * tau * w[i] * w[i] * u[i] * u[i] + tau * w[i] * w[i] * du * du;
    den += w[i] * w[i] * pu[i] * pu[i];
  }
  return num / den;
}

}  // namespace

TEST_CASE("random bumps are normalized and keep clear of the boundary") {
  const GridDomain dom = patch();
  const auto fam = random_bump_family(dom, 50, 7);
  REQUIRE(fam.size() == 50);
  const int n = dom.counts()[0];
  for (const auto& u : fam) {
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < n; ++i)
      if (u[i] != 0.0) {
        CHECK(i >= 3);
        CHECK(i <= n - 4);
      }
  }
  // Distinct draws: no two members coincide.
  CHECK((fam[0] - fam[1]).norm() > 1e-6);
}

TEST_CASE("convex weight keeps the ratio curve flat") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto fam = random_bump_family(dom, 50, 7);
  const auto curve =
      carleman_ratio(P, parse("x1 + x1*x1", 1), fam, tau_grid(8.0, 200.0), "bumps");

  CHECK(curve.ratios.size() == curve.tau_grid.size());
  CHECK(curve.h == doctest::Approx(0.0025));
  CHECK(curve.tau_max_admissible == doctest::Approx(200.0));
  CHECK(curve.skipped == 0);
  CHECK(curve.test_family == "bumps");
  for (double r : curve.ratios) {
    CHECK(std::isfinite(r));
    CHECK(r > 0.0);
  }
  CHECK(curve.bounded());
  CHECK(curve.max_ratio() <= 1.5 * curve.median_ratio());
  CHECK(curve.growth_factor() < 10.0);
}

TEST_CASE("concavified weight makes the ratio blow up") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto fam = random_bump_family(dom, 50, 7);
  const auto curve =
      carleman_ratio(P, parse("x1 - 5*x1*x1", 1), fam, tau_grid(8.0, 200.0), "bumps");

  CHECK_FALSE(curve.bounded());
  CHECK(curve.growth_factor() >= 10.0);
  // The blow-up is far from marginal on this patch.
  CHECK(curve.growth_factor() > 1000.0);
  // Ratios grow with tau once the defect kicks in.
  CHECK(curve.ratios.back() > 100.0 * curve.ratios.front());
}

TEST_CASE("ratio curve is finite and small toward tau zero") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto fam = random_bump_family(dom, 50, 7);
  const auto curve =
      carleman_ratio(P, parse("x1 + x1*x1", 1), fam, tau_grid(0.25, 200.0), "bumps");

  for (double r : curve.ratios) CHECK(std::isfinite(r));
  CHECK(curve.ratios.front() > 0.0);
  CHECK(curve.ratios.front() < curve.median_ratio());
  // Small tau weakens both sides together; the verdict is unchanged.
  CHECK(curve.bounded());
}

TEST_CASE("ratio matches a longhand weighted quotient") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto phi = parse("x1 + x1*x1", 1);
  const auto fam = random_bump_family(dom, 1, 11);
  for (double tau : {0.5, 8.0, 40.0}) {
    const auto curve = carleman_ratio(P, phi, fam, {tau});
    const double by_hand = longhand_ratio(P, phi, tau, fam[0]);
    CHECK(curve.ratios[0] == doctest::Approx(by_hand).epsilon(1e-12));
  }
}

TEST_CASE("conjugation matches the dense weighted matrix") {
  const GridDomain dom = patch();
  const std::size_t n = dom.size();
  Rng rng(21);
  Eigen::VectorXd u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = rng.normal();

  auto dense_check = [&](const LatticeOperator& P, const ExprPtr& phi) {
    std::vector<double> pv(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = eval_value(phi, dom.point(i));
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::VectorXd col = P.apply(Eigen::VectorXd::Unit(n, j));
      for (std::size_t i = 0; i < n; ++i)
        if (col[i] != 0.0) M(i, j) = col[i];
    }
    for (double tau : {0.1, 1.0, 10.0, 200.0}) {
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
          if (M(i, j) != 0.0) C(i, j) = std::exp(tau * (pv[i] - pv[j])) * M(i, j);
      const Eigen::VectorXd direct = C * u;
      const Eigen::VectorXd fast = conjugated_apply(P, phi, tau, u);
      CHECK((fast - direct).norm() <= 1e-9 * direct.norm());
    }
  };

  SUBCASE("constant coefficients") {
    dense_check(LatticeOperator::make(dom), parse("x1 + x1*x1", 1));
  }
  SUBCASE("variable metric with drift and potential") {
    const auto vdom = GridDomain::make(1, {-0.3, 0, 0}, {0.3, 0, 0}, {241, 1, 1},
                                       {parse("1 + 0.3*sin(3*x1)", 1)});
    const auto P = LatticeOperator::make(vdom, parse("cos(2*x1)", 1),
                                         {parse("sin(3*x1)", 1)});
    dense_check(P, parse("x1 + x1*x1", 1));
  }
}

TEST_CASE("conjugation with zero tau is the plain operator") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom, parse("cos(2*x1)", 1));
  Rng rng(5);
  Eigen::VectorXd u(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) u[i] = rng.normal();
  const Eigen::VectorXd a = conjugated_apply(P, parse("x1 + x1*x1", 1), 0.0, u);
  const Eigen::VectorXd b = P.apply(u);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("linear weight conjugation has the hyperbolic closed form") {
  // For phi = x on a uniform line, weighting the second difference entrywise
  // gives exactly cosh(tau h) P + 2 (1 - cosh(tau h)) / h^2 + (2 sinh(tau h) / h) D_c.
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const double h = dom.spacing()[0];
  const auto fam = random_bump_family(dom, 3, 13);
  for (double tau : {4.0, 100.0, 200.0}) {
    const double ch = std::cosh(tau * h), sh = std::sinh(tau * h);
    for (const auto& u : fam) {
      Eigen::VectorXd expect = ch * P.apply(u) + (2.0 * (1.0 - ch) / (h * h)) * u;
      for (std::size_t i = 1; i + 1 < dom.size(); ++i)
        expect[i] += (2.0 * sh / h) * (u[i + 1] - u[i - 1]) / (2.0 * h);
      // Entries of u on pinned rows do not contribute to the operator; drop
      // the diagonal term there to mirror the pinning.
      expect[0] = 0.0;
      expect[dom.size() - 1] = 0.0;
      const Eigen::VectorXd got = conjugated_apply(P, parse("x1", 1), tau, u);
      CHECK((got - expect).norm() <= 1e-12 * expect.norm());
    }
  }
}

TEST_CASE("the two ratio conventions agree within a factor of four") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto phi = parse("x1 + x1*x1", 1);
  const auto fam = random_bump_family(dom, 50, 7);
  const auto taus = tau_grid(8.0, 200.0);
  const auto base = carleman_ratio(P, phi, fam, taus, "bumps");

  const double h = dom.spacing()[0];
  Eigen::VectorXd pv(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) pv[i] = eval_value(phi, dom.point(i));
  const double mid = (pv.maxCoeff() + pv.minCoeff()) / 2.0;

  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    const double tau = taus[ti];
    double worst = 0.0;
    for (const auto& u : fam) {
      // Same quotient phrased through the substituted function v = W u and
      // the conjugated operator applied to v.
      Eigen::VectorXd v(dom.size());
      for (std::size_t i = 0; i < dom.size(); ++i)
        v[i] = std::exp(tau * pv[i] - tau * mid) * u[i];
      const Eigen::VectorXd pc = conjugated_apply(P, phi, tau, v);
      double num = tau * tau * tau * v.squaredNorm();
      for (std::size_t i = 1; i + 1 < dom.size(); ++i) {
        const double dv = (v[i + 1] - v[i - 1]) / (2.0 * h);
        num += tau * dv * dv;
      }
      worst = std::max(worst, num / pc.squaredNorm());
    }
    const double factor = worst / base.ratios[ti];
    CHECK(factor >= 0.25);
    CHECK(factor <= 4.0);
  }
}

TEST_CASE("zeroth and first order terms barely move the curve") {
  const GridDomain dom = patch();
  const auto phi = parse("x1 + x1*x1", 1);
  const auto fam = random_bump_family(dom, 50, 7);
  const auto taus = tau_grid(8.0, 200.0);

  const auto plain = carleman_ratio(LatticeOperator::make(dom), phi, fam, taus);
  const auto lower = carleman_ratio(
      LatticeOperator::make(dom, parse("cos(2*x1)", 1), {parse("sin(3*x1)", 1)}), phi,
      fam, taus);

  for (std::size_t i = 0; i < taus.size(); ++i)
    CHECK(std::abs(lower.ratios[i] - plain.ratios[i]) <= 0.5 * plain.ratios[i]);
  CHECK(plain.bounded() == lower.bounded());
}

TEST_CASE("kernel members are skipped and counted") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto phi = parse("x1 + x1*x1", 1);
  const auto taus = tau_grid(8.0, 200.0);
  auto fam = random_bump_family(dom, 1, 11);
  const auto solo = carleman_ratio(P, phi, fam, taus);

  fam.push_back(Eigen::VectorXd::Zero(dom.size()));  // annihilated outright
  const auto with_zero = carleman_ratio(P, phi, fam, taus);
  CHECK(with_zero.skipped == int(taus.size()));
  for (std::size_t i = 0; i < taus.size(); ++i)
    CHECK(with_zero.ratios[i] == solo.ratios[i]);

  // A family with nothing but kernel members cannot produce a quotient.
  std::vector<Eigen::VectorXd> only_zero{Eigen::VectorXd::Zero(dom.size())};
  CHECK_THROWS_WITH_AS(carleman_ratio(P, phi, only_zero, taus),
                       doctest::Contains("annihilated"), Error);
}

TEST_CASE("weight sharper than the grid misreports the constant") {
  // Past tau = 0.5 / h the per-cell weight increment outruns the stencil: the
  // weighted residual picks up the spill-over cell with a boosted weight and
  // the measured quotient sinks below the plateau, understating the constant.
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto phi = parse("x1 + x1*x1", 1);
  const auto fam = random_bump_family(dom, 50, 7);
  const auto curve = carleman_ratio(P, phi, fam, tau_grid(8.0, 200.0), "bumps");

  double at_cap = 0.0, beyond = 0.0;
  for (const auto& u : fam) {
    at_cap = std::max(at_cap, longhand_ratio(P, phi, 200.0, u));
    beyond = std::max(beyond, longhand_ratio(P, phi, 800.0, u));
  }
  CHECK(at_cap >= 0.85 * curve.max_ratio());
  CHECK(beyond < 0.8 * curve.max_ratio());
  CHECK_THROWS_WITH_AS(carleman_ratio(P, phi, fam, {800.0}),
                       doctest::Contains("admissible"), Error);
}

TEST_CASE("ratio input checking") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto phi = parse("x1 + x1*x1", 1);
  const auto fam = random_bump_family(dom, 2, 3);

  SUBCASE("tau grid must sit inside the admissible range") {
    CHECK_THROWS_WITH_AS(carleman_ratio(P, phi, fam, {250.0}),
                         doctest::Contains("admissible"), Error);
    CHECK_THROWS_WITH_AS(carleman_ratio(P, phi, fam, {0.0}),
                         doctest::Contains("admissible"), Error);
    CHECK_THROWS_WITH_AS(carleman_ratio(P, phi, fam, {-3.0}),
                         doctest::Contains("admissible"), Error);
    CHECK_NOTHROW(carleman_ratio(P, phi, fam, {200.0}));
  }
  SUBCASE("empty inputs are rejected") {
    CHECK_THROWS_AS(carleman_ratio(P, phi, fam, {}), Error);
    CHECK_THROWS_AS(carleman_ratio(P, phi, {}, {8.0}), Error);
  }
  SUBCASE("test functions must fit the grid and avoid the boundary") {
    std::vector<Eigen::VectorXd> bad{Eigen::VectorXd::Ones(7)};
    CHECK_THROWS_AS(carleman_ratio(P, phi, bad, {8.0}), Error);
    std::vector<Eigen::VectorXd> wide{Eigen::VectorXd::Ones(dom.size())};
    CHECK_THROWS_WITH_AS(carleman_ratio(P, phi, wide, {8.0}),
                         doctest::Contains("boundary"), Error);
  }
  SUBCASE("operator and family construction are validated") {
    CHECK_THROWS_AS(LatticeOperator::make(dom, nullptr, {phi, phi}), Error);
    CHECK_THROWS_AS(random_bump_family(dom, 0, 1), Error);
    const auto coarse = GridDomain::make(1, {0, 0, 0}, {1, 0, 0}, {10, 1, 1});
    CHECK_THROWS_AS(random_bump_family(coarse, 1, 1), Error);
  }
  SUBCASE("an empty curve has no summary statistics") {
    RatioCurve empty;
    CHECK_THROWS_AS(empty.max_ratio(), Error);
  }
}

TEST_CASE("ratio csv holds two full precision columns") {
  const GridDomain dom = patch();
  const auto P = LatticeOperator::make(dom);
  const auto fam = random_bump_family(dom, 5, 7);
  const auto curve = carleman_ratio(P, parse("x1 + x1*x1", 1), fam, {8.0, 16.0, 32.0});
  const std::string csv = ratio_csv(curve);

  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "tau,ratio");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    const double tau = std::stod(line.substr(0, comma));
    const double ratio = std::stod(line.substr(comma + 1));
    CHECK(tau == curve.tau_grid[rows]);
    CHECK(ratio == curve.ratios[rows]);
    ++rows;
  }
  CHECK(rows == 3);
}
