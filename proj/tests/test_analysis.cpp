#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pepbcd/analysis.hpp"

using namespace pepbcd;

namespace {

MethodSpec ccd_spec(int p, int K, double gamma_rel = 1.0) {
  MethodSpec spec;
  spec.kind = MethodKind::Ccd;
  spec.blocks = p;
  spec.cycles = K;
  spec.schedule = StepSchedule::relative(gamma_rel, LipschitzVector::uniform(p));
  return spec;
}

}  // namespace

TEST_CASE("closed form comparators") {
  SUBCASE("beck ccd bound") {
    CHECK(beck_ccd_bound(2, 1, LipschitzVector({1, 1}), 1.0) == doctest::Approx(7.2));
    CHECK(beck_ccd_bound(1, 1, LipschitzVector({1}), 1.0) == doctest::Approx(8.0 / 9));
    CHECK(beck_ccd_bound(2, 1, LipschitzVector({1, 1}), 2.0) == doctest::Approx(4 * 7.2));
  }
  SUBCASE("am bound") {
    CHECK(am_bound(2, LipschitzVector({1, 1}), 1.0) == doctest::Approx(2.0));
    CHECK(am_bound(3, LipschitzVector({2, 3}), 1.0) == doctest::Approx(2.0));
    CHECK(am_bound(4, LipschitzVector({2, 3}), 1.0) ==
          doctest::Approx(am_bound(4, LipschitzVector({3, 2}), 1.0)));
    CHECK_THROWS_AS(am_bound(1, LipschitzVector({1, 1}), 1.0), std::invalid_argument);
  }
  SUBCASE("racd expected bound") {
    CHECK(racd_expected_bound(2, 4, 0.0, 2.0) == doctest::Approx(16.0 / 49));
    // p=1: the value-gap term vanishes
    CHECK(racd_expected_bound(1, 4, 123.0, 2.0) == doctest::Approx(racd_expected_bound(1, 4, 0.0, 2.0)));
    CHECK(racd_expected_bound(2, 4, 0.0, 4.0) == doctest::Approx(2 * 16.0 / 49));
  }
  SUBCASE("semi analytic bound") {
    auto bounds = semi_analytic_bound(0.38, 2, 3, LipschitzVector({1, 1}), 1.0);
    REQUIRE(bounds.size() == 3);
    CHECK(bounds[0] == doctest::Approx(0.7246).epsilon(1e-3));
    CHECK(bounds[0] > bounds[1]);
    CHECK(bounds[1] > bounds[2]);
  }
}

TEST_CASE("worst case with comparators") {
  auto report = worst_case(ccd_spec(2, 1), Setting::all(1.0), LipschitzVector({1, 1}));
  REQUIRE(report.status == SolveStatus::Optimal);
  CHECK(report.value == doctest::Approx(1.0).epsilon(1e-5));
  REQUIRE(report.beck_bound.has_value());
  CHECK(*report.beck_bound == doctest::Approx(7.2));
  CHECK(report.value <= *report.beck_bound);
}

TEST_CASE("lower bound ccd") {
  CHECK(lower_bound_ccd(2, 1, {1.0, 1.0}) == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(lower_bound_ccd(3, 1, {1.0, 1.0, 1.0}) == doctest::Approx(3.0 / 14).epsilon(1e-5));
  CHECK(lower_bound_ccd(1, 2, {1.0}) == doctest::Approx(0.1).epsilon(1e-5));
}

TEST_CASE("scale invariance") {
  auto rep = verify_scale_invariance(2, 1, {1.0, 1.0}, LipschitzVector({1.0, 4.0}));
  CHECK(rep.pass);
  CHECK(rep.relative_gap <= 1e-6);
  CHECK(rep.value_weighted == doctest::Approx(0.225149760).epsilon(1e-5));

  // identical constants: the two problems coincide
  auto same = verify_scale_invariance(2, 1, {1.0, 1.0}, LipschitzVector({1.0, 1.0}));
  CHECK(same.pass);
  CHECK(same.value_weighted == doctest::Approx(same.value_unit).epsilon(1e-9));
}

TEST_CASE("descent lemma constant") {
  // (3 - sqrt(5))/2 for two unit-smooth blocks
  double c2 = descent_lemma_constant(2, LipschitzVector({1, 1}));
  CHECK(c2 == doctest::Approx(0.3819660).epsilon(2e-5));
  double c1 = descent_lemma_constant(1, LipschitzVector({1}));
  CHECK(c1 >= 0.5);
  // 1/L scaling under uniform constants
  double c2s = descent_lemma_constant(2, LipschitzVector({2, 2}));
  CHECK(c2s == doctest::Approx(c2 / 2).epsilon(1e-4));
}

TEST_CASE("two block descent lemma") {
  auto rep = verify_two_block_descent(LipschitzVector({1.0, 2.0}));
  CHECK(rep.pass);
  REQUIRE(rep.values.size() == 2);
  CHECK(rep.values[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(rep.values[1] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("residual gradient bound") {
  for (int K : {1, 2}) {
    auto rep = verify_residual_bound(K, LipschitzVector({1.0, 1.0}));
    CHECK(rep.pass);
    CHECK(rep.theorem_bound == doctest::Approx(2.0 / (2 * K - 1)));
    CHECK(rep.value == doctest::Approx(rep.theorem_bound).epsilon(1e-5));
  }
}

TEST_CASE("blowup example") {
  SUBCASE("one cycle at eps = 1") {
    auto rep = blowup_example(1.0, 1);
    REQUIRE(rep.iterates.size() == 1);
    CHECK(rep.iterates[0][0] == doctest::Approx(-0.5));
    CHECK(rep.iterates[0][1] == doctest::Approx(-0.25));
    CHECK(rep.lipschitz == doctest::Approx(4.0));
  }
  SUBCASE("radius grows monotonically as eps decreases") {
    double prev = 0.0;
    for (double eps : {1.0, 0.5, 0.1, 0.01}) {
      auto rep = blowup_example(eps, 3);
      CHECK(rep.Ra > prev);
      prev = rep.Ra;
    }
    CHECK(prev < std::sqrt(2.0));  // approaches sqrt(2) from below
  }
  SUBCASE("large eps collapses immediately") {
    auto rep = blowup_example(1e6, 2);
    CHECK(rep.Ra <= 2e-6);
  }
}

TEST_CASE("numeric replay on an explicit oracle") {
  // separable quadratic: replaying ccd must match the known iteration
  FunctionOracle quad = [](const std::vector<Eigen::VectorXd>& x,
                           std::vector<Eigen::VectorXd>* g) {
    double f = 0.0;
    for (size_t l = 0; l < x.size(); ++l) {
      f += 0.5 * x[l].squaredNorm();
      if (g) (*g)[l] = x[l];
    }
    return f;
  };
  std::vector<Eigen::VectorXd> x0(2);
  x0[0] = Eigen::VectorXd::Constant(1, 1.0);
  x0[1] = Eigen::VectorXd::Constant(1, -2.0);
  auto values = numeric_replay(ccd_spec(2, 1), x0, quad);
  REQUIRE(values.size() == 3);
  CHECK(values[0] == doctest::Approx(0.5 + 2.0));
  CHECK(values[1] == doctest::Approx(2.0));  // block 1 zeroed
  CHECK(values[2] == doctest::Approx(0.0));

  MethodSpec am;
  am.kind = MethodKind::Am;
  am.blocks = 2;
  am.cycles = 1;
  CHECK_THROWS_AS(numeric_replay(am, x0, quad), std::invalid_argument);
}

TEST_CASE("replay rejects an inconsistent instance") {
  LipschitzVector L({1.0});
  auto traj = run_method(ccd_spec(1, 1));
  auto prob = assemble_pep(traj, Setting::init(1.0), Criterion::final_gap(), L);
  auto res = solve(prob);
  REQUIRE(res.ok());
  auto inst = extract_worst_case(res, traj, L);
  inst.triplets[1].x[0](0) += 0.1;  // corrupt the second iterate
  CHECK_THROWS_AS(numeric_replay(ccd_spec(1, 1), inst, 1e-6), std::runtime_error);
}

TEST_CASE("optimal step search on the gd case") {
  // p=1, K=2: the two-step gd bound has its minimum near gamma = 1.6
  std::vector<double> grid;
  for (double g = 1.0; g <= 1.9 + 1e-9; g += 0.1) grid.push_back(g);
  SolverOptions opts;
  opts.tol = 1e-8;
  auto result = optimal_step_search(1, 2, grid, opts);
  CHECK(result.table.size() == grid.size());
  CHECK(result.best_bound < 0.1);  // better than gamma = 1
  CHECK(result.gamma_star > 1.4);
  CHECK(result.gamma_star < 1.75);
}

TEST_CASE("linear fit r2") {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> y{2.0, 4.0, 6.0, 8.0};
  CHECK(linear_fit_r2(x, y) == doctest::Approx(1.0));
  std::vector<double> y2{2.0, 4.1, 5.8, 8.2};
  CHECK(linear_fit_r2(x, y2) > 0.99);
  std::vector<double> y3{1.0, 4.0, 2.0, 9.0};
  CHECK(linear_fit_r2(x, y3) < 0.9);
}

TEST_CASE("am worst case behaves per the comparator") {
  LipschitzVector L({1.0, 1.0});
  MethodSpec am;
  am.kind = MethodKind::Am;
  am.blocks = 2;
  am.cycles = 2;
  auto rep2 = worst_case(am, Setting::all(1.0), L);
  REQUIRE(rep2.status == SolveStatus::Optimal);
  REQUIRE(rep2.am_comparator.has_value());
  CHECK(*rep2.am_comparator == doctest::Approx(2.0));
  CHECK(rep2.value <= 2.0);
  CHECK(rep2.value == doctest::Approx(0.10566243).epsilon(1e-4));

  am.cycles = 3;
  auto rep3 = worst_case(am, Setting::all(1.0), L);
  CHECK(rep3.value == doctest::Approx(0.08093736).epsilon(1e-4));
  CHECK(rep2.value >= rep3.value);  // monotone in K
}

TEST_CASE("ccd value is nonincreasing in the cycle count") {
  LipschitzVector L({1.0, 1.0});
  SolverOptions opts;
  opts.tol = 1e-7;
  double prev = 1e30;
  for (int K = 1; K <= 4; ++K) {
    auto rep = worst_case(ccd_spec(2, K), Setting::init(1.0), L, opts);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.value <= prev + 1e-7);
    prev = rep.value;
  }
}

TEST_CASE("racd tree pep values") {
  LipschitzVector L({1.0, 1.0});
  SUBCASE("shuffled cycles reproduce the tabulated expectation") {
    auto tree = build_sequence_tree(2, 4, Sampling::ShuffledCycles, L);
    auto prob = assemble_random_pep(tree, Setting::init(1.0), Criterion::final_gap(), L);
    auto res = solve(prob);
    REQUIRE(res.ok());
    CHECK(res.value == doctest::Approx(0.10461792).epsilon(1e-5));
  }
  SUBCASE("single-block tree matches the deterministic pep") {
    auto tree = build_sequence_tree(1, 2, Sampling::IidUniform, LipschitzVector::uniform(1));
    auto prob = assemble_random_pep(tree, Setting::init(1.0), Criterion::final_gap(),
                                    LipschitzVector::uniform(1));
    auto res = solve(prob);
    REQUIRE(res.ok());
    CHECK(res.value == doctest::Approx(0.1).epsilon(1e-6));  // gd N=2
  }
  SUBCASE("degenerate distribution equals the fixed sequence") {
    std::vector<std::vector<double>> probs(4, {1.0, 0.0});
    auto tree = build_sequence_tree(2, 4, probs, L);
    auto prob = assemble_random_pep(tree, Setting::init(1.0), Criterion::final_gap(), L);
    auto res = solve(prob);
    REQUIRE(res.ok());
    MethodSpec fixed;
    fixed.kind = MethodKind::Cacd;
    fixed.blocks = 2;
    fixed.order = {0, 0, 0, 0};
    fixed.schedule = StepSchedule::inverse_lipschitz(L);
    auto det = worst_case(fixed, Setting::init(1.0), L);
    CHECK(res.value == doctest::Approx(det.value).epsilon(1e-6));
  }
}
