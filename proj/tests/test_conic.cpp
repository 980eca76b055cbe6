#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pepbcd/conic.hpp"

using namespace pepbcd::conic;

namespace {

ConeProblem make_lp() {
  // min -x1 - 2 x2  s.t. x1 + x2 <= 4, x1 <= 3, x >= 0
  // optimum at (0, 4): value -8
  ConeProblem prob;
  prob.cones.zero = 0;
  prob.cones.nonneg = 4;
  std::vector<Eigen::Triplet<double>> at{
      {0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {2, 0, -1.0}, {3, 1, -1.0}};
  prob.A.resize(4, 2);
  prob.A.setFromTriplets(at.begin(), at.end());
  prob.b = Eigen::VectorXd::Zero(4);
  prob.b << 4.0, 3.0, 0.0, 0.0;
  prob.c = Eigen::VectorXd::Zero(2);
  prob.c << -1.0, -2.0;
  return prob;
}

}  // namespace

TEST_CASE("svec round trip") {
  Eigen::MatrixXd S(3, 3);
  S << 2, 1, 0.5, 1, 3, -1, 0.5, -1, 4;
  Eigen::VectorXd v = svec(S);
  CHECK(v.size() == 6);
  CHECK(unsvec(v, 3).isApprox(S, 1e-15));
  // inner products agree
  Eigen::MatrixXd T = Eigen::MatrixXd::Random(3, 3);
  T = (T + T.transpose()).eval();
  CHECK(svec(S).dot(svec(T)) == doctest::Approx((S * T).trace()).epsilon(1e-12));
}

TEST_CASE("small lp") {
  auto sol = solve_cone(make_lp());
  REQUIRE(sol.status == ConeStatus::Optimal);
  CHECK(sol.primal_obj == doctest::Approx(-8.0).epsilon(1e-6));
  CHECK(sol.x(0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-5));
  CHECK(sol.x(1) == doctest::Approx(4.0).epsilon(1e-5));
  // duals are nonnegative on the nonnegative cone
  for (int i = 0; i < 4; ++i) CHECK(sol.y(i) >= -1e-9);
}

TEST_CASE("tiny sdp with known optimum") {
  // min tr(S) s.t. S_01 = 1, S psd (2x2) -> S = ones, value 2
  ConeProblem prob;
  prob.cones.zero = 1;
  prob.cones.nonneg = 0;
  prob.cones.psd = {2};
  const double r2 = std::sqrt(2.0);
  std::vector<Eigen::Triplet<double>> at;
  at.emplace_back(0, 1, 1.0 / r2 * 1.0);  // svec entry (0,1) is sqrt(2) S_01
  for (int k = 0; k < 3; ++k) at.emplace_back(1 + k, k, -1.0);
  prob.A.resize(4, 3);
  prob.A.setFromTriplets(at.begin(), at.end());
  prob.b = Eigen::VectorXd::Zero(4);
  prob.b(0) = 1.0;
  prob.c = Eigen::VectorXd::Zero(3);
  prob.c(0) = 1.0;
  prob.c(2) = 1.0;

  auto sol = solve_cone(prob);
  REQUIRE(sol.status == ConeStatus::Optimal);
  CHECK(sol.primal_obj == doctest::Approx(2.0).epsilon(1e-7));
  Eigen::MatrixXd S = unsvec(sol.x, 2);
  CHECK(S(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(S(0, 1) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(S(1, 1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("infeasible problem is flagged") {
  // x >= 1 and x <= 0 simultaneously
  ConeProblem prob;
  prob.cones.zero = 0;
  prob.cones.nonneg = 2;
  std::vector<Eigen::Triplet<double>> at{{0, 0, -1.0}, {1, 0, 1.0}};
  prob.A.resize(2, 1);
  prob.A.setFromTriplets(at.begin(), at.end());
  prob.b = Eigen::VectorXd::Zero(2);
  prob.b << -1.0, 0.0;
  prob.c = Eigen::VectorXd::Constant(1, 1.0);
  auto sol = solve_cone(prob);
  CHECK(sol.status == ConeStatus::Infeasible);
}

TEST_CASE("unbounded problem is flagged") {
  // min -x s.t. x >= 0
  ConeProblem prob;
  prob.cones.zero = 0;
  prob.cones.nonneg = 1;
  std::vector<Eigen::Triplet<double>> at{{0, 0, -1.0}};
  prob.A.resize(1, 1);
  prob.A.setFromTriplets(at.begin(), at.end());
  prob.b = Eigen::VectorXd::Zero(1);
  prob.c = Eigen::VectorXd::Constant(1, -1.0);
  auto sol = solve_cone(prob);
  CHECK(sol.status == ConeStatus::Unbounded);
}

TEST_CASE("no constraints") {
  ConeProblem prob;
  prob.A.resize(0, 2);
  prob.b = Eigen::VectorXd::Zero(0);
  prob.c = Eigen::VectorXd::Zero(2);
  SUBCASE("zero objective is optimal") {
    auto sol = solve_cone(prob);
    CHECK(sol.status == ConeStatus::Optimal);
  }
  SUBCASE("nonzero objective is unbounded") {
    prob.c(1) = -1.0;
    auto sol = solve_cone(prob);
    CHECK(sol.status == ConeStatus::Unbounded);
  }
}

TEST_CASE("warm start reuses the previous state") {
  auto prob = make_lp();
  auto first = solve_cone(prob);
  REQUIRE(first.status == ConeStatus::Optimal);
  ConeOptions opts;
  opts.warm_start = first.w;
  auto second = solve_cone(prob, opts);
  CHECK(second.status == ConeStatus::Optimal);
  CHECK(second.iters <= first.iters);
}
