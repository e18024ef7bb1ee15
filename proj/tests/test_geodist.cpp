#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "carleman/distance.hpp"
#include "carleman/report_io.hpp"
#include "carleman/sweep.hpp"
#include "test_helpers.hpp"

using namespace carleman;

namespace {

std::vector<std::uint8_t> point_mask(const GridDomain& dom,
                                     std::initializer_list<std::size_t> idx) {
  std::vector<std::uint8_t> m(dom.size(), 0);
  for (auto i : idx) m[i] = 1;
  return m;
}

}  // namespace

TEST_CASE("1D distances are exact") {
  auto dom = GridDomain::make(1, {0.0}, {1.0}, {11});
  auto src = point_mask(dom, {3});  // x = 0.3
  const auto field = distance_field(dom, src, 1);
  for (int i = 0; i < 11; ++i)
    CHECK(field.value[i] == doctest::Approx(std::abs(0.1 * i - 0.3)).epsilon(1e-12));
  CHECK(field.unreachable == 0);
}

TEST_CASE("2D overshoot stays under the 8-neighbor lattice bound") {
  const int n = 101;
  auto dom = GridDomain::make(2, {0.0, 0.0}, {1.0, 1.0}, {n, n});
  auto src = point_mask(dom, {0});  // corner (0, 0)
  const auto field = distance_field(dom, src, 2);

  double worst = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == 0 && j == 0) continue;
      const double exact = std::hypot(i / 100.0, j / 100.0);
      const double ratio = field.value[dom.index(i, j)] / exact;
      CHECK(ratio >= 1.0 - 1e-12);  // polyline length never beats the segment
      worst = std::max(worst, ratio);
    }
  // sec(pi/8) = 1.08239: the worst direction has tan(theta) = sqrt(2) - 1.
  CHECK(worst <= 1.083);
  CHECK(worst >= 1.08);  // the bound is sharp on this grid
}

TEST_CASE("richer stencils cut the overshoot") {
  const int n = 61;
  auto dom = GridDomain::make(2, {0.0, 0.0}, {1.0, 1.0}, {n, n});
  auto src = point_mask(dom, {0});
  double worst[4] = {0.0, 0.0, 0.0, 0.0};
  for (int order = 1; order <= 3; ++order) {
    const auto field = distance_field(dom, src, order);
    double w = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == 0 && j == 0) continue;
        const double exact = std::hypot(i / double(n - 1), j / double(n - 1));
        w = std::max(w, field.value[dom.index(i, j)] / exact);
      }
    worst[order] = w;
  }
  CHECK(worst[1] > worst[2]);
  CHECK(worst[2] > worst[3]);
  CHECK(worst[1] <= std::sqrt(2.0) + 1e-9);  // axis-only worst case, 45 degrees
  CHECK(worst[3] <= 1.028);  // knight moves: sec of half the widest gap
}

TEST_CASE("3D overshoot matches the 26-neighbor bound") {
  const int n = 41;
  auto dom = GridDomain::make(3, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, {n, n, n});
  auto src = point_mask(dom, {0});
  const auto field = distance_field(dom, src, 2);
  double worst = 1.0;
  for (std::size_t idx = 1; idx < dom.size(); ++idx) {
    const auto c = dom.coords(idx);
    const double exact =
        std::sqrt(double(c[0]) * c[0] + double(c[1]) * c[1] + double(c[2]) * c[2]) /
        double(n - 1);
    const double ratio = field.value[idx] / exact;
    CHECK(ratio >= 1.0 - 1e-12);
    worst = std::max(worst, ratio);
  }
  // Exact worst case sqrt(9 - 2 sqrt 2 - 2 sqrt 6) = 1.12810 along the
  // direction (1, sqrt(2)-1, sqrt(3)-sqrt(2)); e.g. (40,17,13) decomposes as
  // 23 axis + 4 face-diagonal + 13 body-diagonal steps.
  CHECK(worst <= 1.129);
  CHECK(worst >= 1.10);
}

TEST_CASE("constant conformal metric scales distances exactly") {
  const int n = 41;
  auto flat = GridDomain::make(2, {0.0, 0.0}, {1.0, 1.0}, {n, n});
  auto scaled = GridDomain::make(
      2, {0.0, 0.0}, {1.0, 1.0}, {n, n},
      {parse("4", 2), parse("0", 2), parse("4", 2)});  // g = 4 I
  auto src = point_mask(flat, {flat.index(5, 7)});
  const auto f1 = distance_field(flat, src, 2);
  const auto f2 = distance_field(scaled, src, 2);
  for (std::size_t i = 0; i < flat.size(); ++i)
    CHECK(f2.value[i] == doctest::Approx(2.0 * f1.value[i]).epsilon(1e-12));
}

TEST_CASE("growing the source set never increases distances") {
  const int n = 31;
  auto dom = GridDomain::make(2, {0.0, 0.0}, {1.0, 1.0}, {n, n});
  Rng rng(23);
  std::vector<std::uint8_t> small(dom.size(), 0), big(dom.size(), 0);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (rng.uniform() < 0.02) small[i] = big[i] = 1;
    if (rng.uniform() < 0.05) big[i] = 1;
  }
  small[dom.index(3, 3)] = big[dom.index(3, 3)] = 1;  // keep E0 nonempty
  const auto fs = distance_field(dom, small, 2);
  const auto fb = distance_field(dom, big, 2);
  for (std::size_t i = 0; i < dom.size(); ++i)
    CHECK(fb.value[i] <= fs.value[i] + 1e-15);
}

TEST_CASE("disconnected components are flagged unreachable") {
  auto dom_mask = std::vector<std::uint8_t>(11, 1);
  dom_mask[5] = 0;  // cut the segment in two
  auto dom = GridDomain::make(1, {0.0}, {1.0}, {11}, {}, dom_mask);
  auto src = point_mask(dom, {0});
  const auto field = distance_field(dom, src, 1);
  CHECK(field.unreachable == 5);
  for (int i = 6; i < 11; ++i) CHECK(std::isinf(field.value[i]));
  CHECK(field.value[4] == doctest::Approx(0.4));
}

TEST_CASE("distance error handling") {
  auto dom = GridDomain::make(1, {0.0}, {1.0}, {11});
  std::vector<std::uint8_t> empty(dom.size(), 0);
  CHECK_THROWS_AS(distance_field(dom, empty, 1), Error);
  CHECK_THROWS_AS(distance_field(dom, point_mask(dom, {0}), 7), Error);

  // Indefinite metric must be rejected at construction.
  CHECK_THROWS_AS(GridDomain::make(1, {-1.0}, {1.0}, {11}, {parse("x1", 1)}), Error);
}

TEST_CASE("sup_distance: exact width, asymmetry, containment") {
  const int n = 51;
  auto dom = GridDomain::make(2, {0.0, 0.0}, {1.0, 1.0}, {n, n});
  std::vector<std::uint8_t> left(dom.size(), 0), all(dom.size(), 1);
  for (int j = 0; j < n; ++j) left[dom.index(0, j)] = 1;
  // Farthest point from the left edge is the right edge; the optimal lattice
  // path is a straight axis run, so the width is exact.
  CHECK(sup_distance(dom, all, left) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sup_distance(dom, left, left) == 0.0);

  // L(E1, E0) is not symmetric.
  auto e0 = point_mask(dom, {dom.index(0, 0)});
  auto e1 = point_mask(dom, {dom.index(0, 10), dom.index(0, 40)});
  const double l10 = sup_distance(dom, e1, e0);
  const double l01 = sup_distance(dom, e0, e1);
  CHECK(l10 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(l01 == doctest::Approx(0.2).epsilon(1e-12));

  // Zero sup-distance characterizes containment at grid resolution.
  auto inside = point_mask(dom, {dom.index(0, 0)});
  CHECK(sup_distance(dom, inside, e0) == 0.0);
  auto outside = point_mask(dom, {dom.index(0, 0), dom.index(5, 5)});
  CHECK(sup_distance(dom, outside, e0) > 0.0);
}

TEST_CASE("region of dependence slices") {
  const int n = 81;
  auto dom = GridDomain::make(2, {-1.0, -1.0}, {1.0, 1.0}, {n, n});
  auto omega = point_mask(dom, {dom.index(40, 40)});  // center
  const double T = 0.5;
  const std::vector<double> times = {0.0, 0.2, -0.2, 0.49, 0.5, 0.8};
  const auto slices = region_of_dependence(dom, omega, T, times, 2);
  REQUIRE(slices.size() == times.size());

  // t = 0 slice is the open ball {dist < T}.
  const auto field = distance_field(dom, omega, 2);
  for (std::size_t i = 0; i < dom.size(); ++i)
    CHECK(slices[0][i] == (field.value[i] < T ? 1 : 0));

  // Symmetric in t, shrinking with |t|, empty past the cone tip.
  std::size_t n0 = 0, n2 = 0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    CHECK(slices[1][i] == slices[2][i]);
    if (slices[1][i]) CHECK(slices[0][i]);
    n0 += slices[0][i];
    n2 += slices[1][i];
  }
  CHECK(n0 > n2);
  CHECK(n2 > 0);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    CHECK(slices[4][i] == 0);
    CHECK(slices[5][i] == 0);
  }
  // Just inside the tip a sliver survives (the center itself).
  CHECK(slices[3][dom.index(40, 40)] == 1);

  CHECK_THROWS_AS(region_of_dependence(dom, omega, 0.0, times, 2), Error);
}

TEST_CASE("grid payload round-trips through the binary format") {
  GridPayload p;
  p.name = "demo";
  p.dims = {3, 4};
  p.lo = {0.0, -1.0};
  p.hi = {1.0, 1.0};
  p.data.resize(12);
  Rng rng(9);
  for (auto& v : p.data) v = rng.normal();

  const auto path = std::filesystem::temp_directory_path() / "carleman_grid_test.bin";
  write_grid(path, p);
  const auto q = read_grid(path);
  CHECK(q.name == p.name);
  CHECK(q.dims == p.dims);
  CHECK(q.lo == p.lo);
  CHECK(q.hi == p.hi);
  REQUIRE(q.data.size() == p.data.size());
  for (std::size_t i = 0; i < p.data.size(); ++i) CHECK(q.data[i] == p.data[i]);
  std::filesystem::remove(path);

  // CSV rendering: header plus one row per point.
  const std::string csv = grid_csv(p);
  CHECK(csv.rfind("x1,x2,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("bump profile meets its declared constraints") {
  const auto zeta = BumpProfile::build(1.2);
  CHECK(zeta.value(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(zeta.value(1.0) == 0.0);
  CHECK(zeta.value(-1.0) == 0.0);

  double max_slope = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double s = -1.0 + 2.0 * i / 10000.0;
    const double v = zeta.value(s);
    CHECK(v >= 0.0);
    CHECK(v == doctest::Approx(zeta.value(-s)).epsilon(1e-13));
    max_slope = std::max(max_slope, std::abs(zeta.derivative(s)));
  }
  CHECK(max_slope <= 1.2);
  CHECK(zeta.slope_margin() > 0.0005);
  CHECK(zeta.slope_margin() < 0.01);
}

TEST_CASE("bump profile derivatives agree with finite differences") {
  const auto zeta = BumpProfile::build(1.2);
  Rng rng(31);
  const double h = 1e-5;
  for (int k = 0; k < 200; ++k) {
    const double s = rng.uniform(-0.99, 0.99);
    const double fd1 = (zeta.value(s + h) - zeta.value(s - h)) / (2.0 * h);
    const double fd2 = (zeta.derivative(s + h) - zeta.derivative(s - h)) / (2.0 * h);
    CHECK(zeta.derivative(s) == doctest::Approx(fd1).epsilon(5e-7).scale(1.0));
    CHECK(zeta.second_derivative(s) == doctest::Approx(fd2).epsilon(5e-5).scale(10.0));
  }
  // Second derivative is continuous across the triangle kinks (C^2 profile).
  const double kink = zeta.triangle_halfwidth();
  for (double d : {1e-4, 1e-5}) {
    const double jump =
        std::abs(zeta.second_derivative(kink + d) - zeta.second_derivative(kink - d));
    CHECK(jump <= 200.0 * d);
  }
}

TEST_CASE("sweep family validation") {
  CHECK_THROWS_AS(SweepFamily::make(1.0, 1.3, 0.9, 0.1, 0.2, 2), Error);
  CHECK_THROWS_AS(SweepFamily::make(1.0, 1.3, 1.2, 0.3, 0.2, 2), Error);
  CHECK_THROWS_AS(SweepFamily::make(1.0, 1.3, 1.2, 0.1, 0.2, 1), Error);
  CHECK_THROWS_AS(SweepFamily::make(-1.0, 1.3, 1.2, 0.1, 0.2, 2), Error);
  // alpha >= t0/ell0 is a broken hypothesis, not a construction error.
  const auto loose = SweepFamily::make(1.0, 1.3, 1.35, 0.1, 0.2, 2);
  CHECK(loose.alpha == 1.35);
}

TEST_CASE("sweep over the normal-form symbol clears the predicted margin") {
  const auto fam = SweepFamily::make(1.0, 1.3, 1.2, 0.1, 0.2, 2);
  const auto p = normal_form_symbol(2);
  const auto rep = build_sweep(fam, p);

  CHECK(rep.eta_pred == doctest::Approx(1.0 - 1.44 / 1.69).epsilon(1e-12));
  CHECK(rep.hypothesis_ok);
  CHECK(rep.noncharacteristic);
  CHECK(rep.min_margin >= rep.eta_pred);
  CHECK(rep.min_margin < 0.5);  // the slope region is actually sampled
  // eps = 0: the surface is the flat slice {l = const}, margin exactly 1.
  CHECK(rep.margins.front() == doctest::Approx(1.0).epsilon(1e-14));
  // Margin continuity in eps, dominated by the pointwise sensitivity.
  CHECK(rep.max_margin_jump <= rep.eps_sensitivity + 1e-12);
  CHECK(rep.slope_margin > 0.0);
}

TEST_CASE("sweep with a variable metric block stays noncharacteristic") {
  const auto fam = SweepFamily::make(1.0, 1.3, 1.2, 0.1, 0.2, 2);
  const auto p = normal_form_symbol(2, {parse("1 + 0.2*x2", 2)});
  const auto rep = build_sweep(fam, p);
  CHECK(rep.noncharacteristic);
  CHECK(rep.min_margin >= rep.eta_pred);
}

TEST_CASE("steep profile past the hypothesis produces a characteristic point") {
  const auto fam = SweepFamily::make(1.0, 1.3, 1.35, 0.1, 0.2, 2);
  const auto p = normal_form_symbol(2);
  const auto rep = build_sweep(fam, p);
  CHECK(!rep.hypothesis_ok);
  CHECK(rep.eta_pred < 0.0);
  CHECK(rep.min_margin <= 0.0);
  CHECK(!rep.noncharacteristic);
  CHECK(rep.worst.value == rep.min_margin);

  // The witness reproduces: rebuild dPsi_eps at the reported point.
  const auto& x = rep.worst.x;
  const double rho = std::sqrt((x[1] / fam.b) * (x[1] / fam.b) +
                               (x[0] / fam.t0) * (x[0] / fam.t0));
  const double k = fam.zeta.derivative(rho) / rho;
  Eigen::VectorXd xi(3);
  xi << rep.worst.eps * fam.ell0 * k * x[0] / (fam.t0 * fam.t0),
      rep.worst.eps * fam.ell0 * k * x[1] / (fam.b * fam.b), -1.0;
  CHECK(eval_p2(p, x, xi) == doctest::Approx(rep.min_margin).epsilon(1e-12));
}

TEST_CASE("sweep rejects mismatched symbols and degenerate grids") {
  const auto fam = SweepFamily::make(1.0, 1.3, 1.2, 0.1, 0.2, 2);
  CHECK_THROWS_AS(build_sweep(fam, normal_form_symbol(3)), Error);
  SweepGrid g;
  g.nt = 2;
  CHECK_THROWS_AS(build_sweep(fam, normal_form_symbol(2), g), Error);
}
