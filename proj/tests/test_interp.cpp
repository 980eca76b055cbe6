#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "pepbcd/algos.hpp"
#include "pepbcd/interp.hpp"

using namespace pepbcd;

namespace {

std::vector<Eigen::VectorXd> vec2(double x, double y) {
  std::vector<Eigen::VectorXd> v(2);
  v[0] = Eigen::VectorXd::Constant(1, x);
  v[1] = Eigen::VectorXd::Constant(1, y);
  return v;
}

// separable convex quadratic with per-block curvatures <= L
NumericTriplet quad_sample(const std::vector<double>& curv,
                           const std::vector<Eigen::VectorXd>& x) {
  NumericTriplet t;
  t.x = x;
  t.f = 0.0;
  for (size_t l = 0; l < x.size(); ++l) {
    t.g.push_back(curv[l] * x[l]);
    t.f += 0.5 * curv[l] * x[l].squaredNorm();
  }
  return t;
}

}  // namespace

TEST_CASE("constraint count is p*n*(n-1)") {
  LipschitzVector L({1.0, 2.0});
  MethodSpec spec;
  spec.kind = MethodKind::Ccd;
  spec.blocks = 2;
  spec.cycles = 1;
  spec.schedule = StepSchedule::inverse_lipschitz(L);
  auto traj = run_ccd(spec);

  SUBCASE("two triplets") {
    std::vector<Triplet> two{traj.triplets[0], traj.triplets[1]};
    CHECK(generate_interp_constraints(two, L).size() == 4);
  }
  SUBCASE("full trajectory: iterates 0..N plus star") {
    // n = N+2 triplets
    CHECK(generate_interp_constraints(traj.triplets, L).size() == 2 * 4 * 3);
  }
}

TEST_CASE("p=1 constraints reduce to the classical smooth-convex inequality") {
  LipschitzVector L({2.0});
  auto basis = Basis::fixed_step(1, 2);
  Triplet a{BlockVectorExpr::unit(basis, {BasisKind::InitialPoint, 0}),
            BlockVectorExpr::unit(basis, {BasisKind::Gradient, 0}), 0, "a"};
  Triplet b{BlockVectorExpr(basis), BlockVectorExpr::unit(basis, {BasisKind::Gradient, 1}), 1,
            "b"};
  auto cons = generate_interp_constraints({a, b}, L);
  REQUIRE(cons.size() == 2);

  // f_a - f_b - <g_b, x_a - x_b> - 1/(2L)||g_a-g_b||^2 >= 0
  ScalarExpr expected = ScalarExpr::fval(basis, 0) - ScalarExpr::fval(basis, 1);
  expected -= inner_product(b.gradient, a.point - b.point);
  ScalarExpr sq = inner_product(a.gradient - b.gradient, a.gradient - b.gradient, 0);
  sq *= 1.0 / (2.0 * L[0]);
  expected -= sq;
  CHECK(cons[0].expr == expected);
}

TEST_CASE("duplicate triplet names rejected") {
  LipschitzVector L({1.0});
  auto basis = Basis::fixed_step(1, 2);
  Triplet a{BlockVectorExpr(basis), BlockVectorExpr::unit(basis, {BasisKind::Gradient, 0}), 0,
            "dup"};
  Triplet b{BlockVectorExpr(basis), BlockVectorExpr::unit(basis, {BasisKind::Gradient, 1}), 1,
            "dup"};
  CHECK_THROWS_AS(generate_interp_constraints({a, b}, L), std::invalid_argument);
}

TEST_CASE("counterexample set passes the pairwise check") {
  auto set = counterexample_triplets();
  auto report = check_finite_set(set.points, set.L, 1e-12);
  CHECK(report.pass);
  CHECK(report.worst_residual >= -1e-12);
}

TEST_CASE("single triplet passes vacuously") {
  auto set = counterexample_triplets();
  auto report = check_finite_set({set.points[0]}, set.L, 0.0);
  CHECK(report.pass);
  CHECK(report.violations.empty());
}

TEST_CASE("two samples of 0.5||x||^2") {
  LipschitzVector L({1.0, 1.0});
  NumericTriplet t0{vec2(0, 0), vec2(0, 0), 0.0};
  NumericTriplet t1{vec2(1, 0), vec2(1, 0), 0.5};
  auto report = check_finite_set({t0, t1}, L, 0.0);
  CHECK(report.pass);
  // hand-evaluated residuals: block 1 pairs are tight (0), block 2 pairs 0.5
  CHECK(report.worst_residual == 0.0);
}

TEST_CASE("violated pair is reported") {
  LipschitzVector L({1.0, 1.0});
  NumericTriplet t0{vec2(0, 0), vec2(0, 0), 0.0};
  NumericTriplet bad{vec2(1, 0), vec2(3, 0), 0.1};  // gradient too steep for the value
  auto report = check_finite_set({t0, bad}, L, 1e-9);
  CHECK_FALSE(report.pass);
  CHECK(report.worst_residual < 0.0);
  CHECK_FALSE(report.violations.empty());
}

TEST_CASE("dimension mismatch raises") {
  LipschitzVector L({1.0, 1.0});
  NumericTriplet t0{vec2(0, 0), vec2(0, 0), 0.0};
  NumericTriplet t1 = t0;
  t1.x[1] = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(check_finite_set({t0, t1}, L, 0.0), std::invalid_argument);
}

TEST_CASE("samples of separable quadratics always pass") {
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss;
  std::vector<double> curv{0.7, 1.0};
  LipschitzVector L({1.0, 1.0});
  std::vector<NumericTriplet> pts;
  for (int i = 0; i < 8; ++i) {
    std::vector<Eigen::VectorXd> x(2);
    x[0] = Eigen::VectorXd::NullaryExpr(2, [&](Eigen::Index) { return gauss(rng); });
    x[1] = Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return gauss(rng); });
    pts.push_back(quad_sample(curv, x));
  }
  CHECK(check_finite_set(pts, L, 1e-9).pass);
}

TEST_CASE("two point interpolant") {
  LipschitzVector L({1.0, 1.0});
  NumericTriplet t0{vec2(0, 0), vec2(0, 0), 0.0};
  NumericTriplet t1{vec2(1, 0), vec2(1, 0), 0.5};
  TwoPointInterpolant f(t0, t1, L);

  SUBCASE("reproduces both samples") {
    CHECK(f.value(t0.x) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(f.value(t1.x) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("degenerate pair gives the affine function") {
    NumericTriplet s{vec2(1, 2), vec2(0.5, -0.25), 1.0};
    TwoPointInterpolant aff(s, s, L);
    auto q = vec2(3, -1);
    double expected = 1.0 + 0.5 * (3 - 1) + (-0.25) * (-1 - 2);
    CHECK(aff.value(q) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("oracle samples satisfy the pairwise conditions") {
    std::mt19937 rng(17);
    std::normal_distribution<double> gauss(0.0, 2.0);
    std::vector<NumericTriplet> samples;
    for (int i = 0; i < 100; ++i) samples.push_back(f.sample(vec2(gauss(rng), gauss(rng))));
    for (size_t i = 0; i + 1 < samples.size(); i += 2)
      CHECK(check_finite_set({samples[i], samples[i + 1]}, L, 1e-9).pass);
  }
  SUBCASE("midpoint convexity along random segments") {
    std::mt19937 rng(23);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      auto a = vec2(gauss(rng), gauss(rng));
      auto b = vec2(gauss(rng), gauss(rng));
      auto mid = vec2(0.5 * (a[0](0) + b[0](0)), 0.5 * (a[1](0) + b[1](0)));
      CHECK(f.value(mid) <= 0.5 * (f.value(a) + f.value(b)) + 1e-9);
    }
  }
  SUBCASE("per-block gradient Lipschitz continuity") {
    std::mt19937 rng(29);
    std::normal_distribution<double> gauss(0.0, 1.5);
    for (int i = 0; i < 50; ++i) {
      for (int l = 0; l < 2; ++l) {
        auto a = vec2(gauss(rng), gauss(rng));
        auto b = a;
        b[static_cast<size_t>(l)](0) += gauss(rng);
        auto ga = f.subgradient(a);
        auto gb = f.subgradient(b);
        double dg = (ga[static_cast<size_t>(l)] - gb[static_cast<size_t>(l)]).norm();
        double dx = (a[static_cast<size_t>(l)] - b[static_cast<size_t>(l)]).norm();
        CHECK(dg <= L[l] * dx + 1e-9);
      }
    }
  }
}

TEST_CASE("interpolant refuses invalid pairs") {
  LipschitzVector L({1.0, 1.0});
  NumericTriplet t0{vec2(0, 0), vec2(0, 0), 0.0};
  NumericTriplet bad{vec2(1, 0), vec2(3, 0), 0.1};
  CHECK_THROWS_AS(TwoPointInterpolant(t0, bad, L), std::invalid_argument);
}

TEST_CASE("role swap when the assumed inequality direction is reversed") {
  LipschitzVector L({1.0, 1.0});
  NumericTriplet t1{vec2(0, 0), vec2(0, 0), 0.0};
  NumericTriplet t2{vec2(1, 0), vec2(0.8, 0), 0.35};
  double fwd = t2.f - t1.f - (t1.g[0](0) * (t2.x[0](0) - t1.x[0](0)));
  double rev = t1.f - t2.f - (t2.g[0](0) * (t1.x[0](0) - t2.x[0](0)));
  CHECK(fwd < rev);  // passing (t2, t1) exercises the swap path
  TwoPointInterpolant f(t2, t1, L);
  CHECK(f.value(t1.x) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.value(t2.x) == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(check_finite_set({f.sample(vec2(0.3, -0.7)), f.sample(vec2(-2, 1))}, L, 1e-9).pass);
}

TEST_CASE("triplet set json round trip") {
  std::string doc = R"({
    "L": [1.0, 2.0],
    "points": [
      {"x": [[0.0], [0.0, 1.0]], "g": [[0.0], [0.0, 2.0]], "f": 1.0},
      {"x": [[1.0], [0.0, 0.0]], "g": [[0.5], [0.0, 0.0]], "f": 0.25}
    ]
  })";
  auto set = parse_triplet_set(doc);
  CHECK(set.L.size() == 2);
  CHECK(set.L[1] == 2.0);
  REQUIRE(set.points.size() == 2);
  CHECK(set.points[0].x[1](1) == 1.0);
  CHECK(set.points[1].f == 0.25);

  const char* path = "/tmp/pepbcd_triplets.json";
  {
    std::ofstream out(path);
    out << doc;
  }
  auto from_file = load_triplet_set(path);
  CHECK(from_file.points.size() == 2);
  CHECK(from_file.points[1].g[0](0) == 0.5);
  std::remove(path);
  CHECK_THROWS_AS(load_triplet_set("/tmp/pepbcd_missing.json"), std::runtime_error);
}
