#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pepbcd/core.hpp"

using namespace pepbcd;

namespace {

// random small expressions for the algebraic property checks
BlockVectorExpr random_expr(const BasisPtr& basis, std::mt19937& rng) {
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_int_distribution<int> pick(0, basis->cols() - 1);
  BlockVectorExpr e(basis);
  for (int l = 0; l < basis->blocks(); ++l)
    for (int t = 0; t < 3; ++t) e.add_term(l, basis->label(pick(rng)), coeff(rng));
  return e;
}

GramValues random_values(const BasisPtr& basis, int dim, int nf, std::mt19937& rng,
                         std::vector<Eigen::MatrixXd>* columns = nullptr) {
  std::normal_distribution<double> gauss;
  std::vector<Eigen::MatrixXd> cols;
  for (int l = 0; l < basis->blocks(); ++l) {
    Eigen::MatrixXd P(dim, basis->cols());
    for (Eigen::Index i = 0; i < P.rows(); ++i)
      for (Eigen::Index j = 0; j < P.cols(); ++j) P(i, j) = gauss(rng);
    cols.push_back(P);
  }
  Eigen::VectorXd f(nf);
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = gauss(rng);
  if (columns) *columns = cols;
  return GramValues::from_columns(cols, f);
}

}  // namespace

TEST_CASE("unit basis inner product") {
  auto basis = Basis::fixed_step(2, 3);
  auto e = BlockVectorExpr::unit(basis, {BasisKind::Gradient, 0});
  ScalarExpr ip = inner_product(e, e);
  for (int l = 0; l < 2; ++l)
    CHECK(ip.gram_coeff(l, {BasisKind::Gradient, 0}, {BasisKind::Gradient, 0}) == 1.0);
  CHECK(ip.fval_terms().empty());
  CHECK(ip.constant_term() == 0.0);
}

TEST_CASE("inner product with the zero expression is zero") {
  auto basis = Basis::fixed_step(2, 2);
  auto x = BlockVectorExpr::unit(basis, {BasisKind::InitialPoint, 0});
  BlockVectorExpr zero(basis);
  CHECK(inner_product(x, zero).is_zero());
}

TEST_CASE("ccd step expansion of <x_1, g_0>") {
  // x_1 = x_0 - gamma g_0 on block 1 only
  const double gamma = 0.75;
  auto basis = Basis::fixed_step(2, 2);
  auto x0 = BlockVectorExpr::unit(basis, {BasisKind::InitialPoint, 0});
  auto g0 = BlockVectorExpr::unit(basis, {BasisKind::Gradient, 0});
  auto x1 = x0 - gamma * BlockVectorExpr::unit_block(basis, {BasisKind::Gradient, 0}, 0);
  ScalarExpr ip = inner_product(x1, g0);
  CHECK(ip.gram_coeff(0, {BasisKind::InitialPoint, 0}, {BasisKind::Gradient, 0}) ==
        doctest::Approx(0.5));  // symmetric storage halves the cross term
  CHECK(ip.gram_coeff(0, {BasisKind::Gradient, 0}, {BasisKind::Gradient, 0}) ==
        doctest::Approx(-gamma));
  CHECK(ip.gram_coeff(1, {BasisKind::InitialPoint, 0}, {BasisKind::Gradient, 0}) ==
        doctest::Approx(0.5));
  CHECK(ip.gram_coeff(1, {BasisKind::Gradient, 0}, {BasisKind::Gradient, 0}) == 0.0);
}

TEST_CASE("bilinearity, symmetry and block additivity") {
  auto basis = Basis::fixed_step(3, 4);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    auto a = random_expr(basis, rng);
    auto b = random_expr(basis, rng);
    auto c = random_expr(basis, rng);
    double alpha = 1.25, beta = -0.5;

    ScalarExpr lhs = inner_product(alpha * a + beta * b, c);
    ScalarExpr rhs = alpha * inner_product(a, c) + beta * inner_product(b, c);
    std::mt19937 vrng(trial);
    auto vals = random_values(basis, 5, 1, vrng);
    CHECK(evaluate(lhs, vals) == doctest::Approx(evaluate(rhs, vals)).epsilon(1e-12));

    CHECK(inner_product(a, b) == inner_product(b, a));

    ScalarExpr total = inner_product(a, b);
    ScalarExpr sum(basis);
    for (int l = 0; l < 3; ++l) sum += inner_product(a, b, l);
    CHECK(total == sum);
  }
}

TEST_CASE("evaluation matches direct numeric inner products") {
  auto basis = Basis::fixed_step(2, 3);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_expr(basis, rng);
    auto b = random_expr(basis, rng);
    std::vector<Eigen::MatrixXd> cols;
    auto vals = random_values(basis, 4, 2, rng, &cols);
    double direct = 0.0;
    for (int l = 0; l < 2; ++l) direct += evaluate(a, cols[l], l).dot(evaluate(b, cols[l], l));
    double symbolic = evaluate(inner_product(a, b), vals);
    CHECK(symbolic == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("weighted norms") {
  auto basis = Basis::fixed_step(2, 2);
  auto x = BlockVectorExpr::unit(basis, {BasisKind::InitialPoint, 0});

  ScalarExpr plain = weighted_norm_sq(x, {1.0, 1.0});
  CHECK(plain == inner_product(x, x));

  ScalarExpr weighted = weighted_norm_sq(x, {2.0, 3.0});
  CHECK(weighted.gram_coeff(0, {BasisKind::InitialPoint, 0}, {BasisKind::InitialPoint, 0}) == 2.0);
  CHECK(weighted.gram_coeff(1, {BasisKind::InitialPoint, 0}, {BasisKind::InitialPoint, 0}) == 3.0);

  CHECK(weighted_norm_sq(BlockVectorExpr(basis), {1.0, 1.0}).is_zero());
  CHECK_THROWS_AS(weighted_norm_sq(x, {1.0}), std::invalid_argument);
}

TEST_CASE("exact zero pruning") {
  auto basis = Basis::fixed_step(1, 2);
  auto g = BlockVectorExpr::unit(basis, {BasisKind::Gradient, 0});
  auto diff = g - g;
  CHECK(diff.is_zero());
  CHECK(diff.coeffs(0).empty());
}

TEST_CASE("mismatched bases are rejected") {
  auto b1 = Basis::fixed_step(2, 2);
  auto b2 = Basis::fixed_step(2, 2);
  auto x = BlockVectorExpr::unit(b1, {BasisKind::InitialPoint, 0});
  auto y = BlockVectorExpr::unit(b2, {BasisKind::InitialPoint, 0});
  CHECK_THROWS_AS(inner_product(x, y), std::invalid_argument);
}

TEST_CASE("lipschitz vector validation") {
  CHECK_THROWS_AS(LipschitzVector({1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(LipschitzVector({0.0}), std::invalid_argument);
  LipschitzVector L({1.0, 4.0});
  CHECK(L.max() == 4.0);
  CHECK(L.min() == 1.0);
}
