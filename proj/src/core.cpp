#include "pepbcd/core.hpp"

#include <algorithm>
#include <cmath>

namespace pepbcd {

std::string to_string(const BasisLabel& label) {
  switch (label.kind) {
    case BasisKind::Gradient:
      return "g" + std::to_string(label.index);
    case BasisKind::InitialPoint:
      return "x0";
    case BasisKind::Iterate:
      return "x" + std::to_string(label.index);
  }
  return "?";
}

Basis::Basis(int blocks, std::vector<BasisLabel> columns)
    : blocks_(blocks), columns_(std::move(columns)) {
  if (blocks_ < 1) throw std::invalid_argument("Basis: blocks must be >= 1");
  for (int i = 0; i < static_cast<int>(columns_.size()); ++i) {
    auto [it, inserted] = index_.emplace(columns_[static_cast<size_t>(i)], i);
    if (!inserted) throw std::invalid_argument("Basis: duplicate label " + to_string(it->first));
  }
}

std::shared_ptr<const Basis> Basis::fixed_step(int blocks, int gradient_count) {
  std::vector<BasisLabel> cols;
  cols.reserve(static_cast<size_t>(gradient_count) + 1);
  for (int i = 0; i < gradient_count; ++i) cols.push_back({BasisKind::Gradient, i});
  cols.push_back({BasisKind::InitialPoint, 0});
  return std::make_shared<Basis>(blocks, std::move(cols));
}

std::shared_ptr<const Basis> Basis::extended(int blocks, int steps) {
  std::vector<BasisLabel> cols;
  cols.reserve(2 * static_cast<size_t>(steps) + 2);
  for (int i = 0; i <= steps; ++i) cols.push_back({BasisKind::Gradient, i});
  cols.push_back({BasisKind::InitialPoint, 0});
  for (int i = 1; i <= steps; ++i) cols.push_back({BasisKind::Iterate, i});
  return std::make_shared<Basis>(blocks, std::move(cols));
}

int Basis::column(const BasisLabel& label) const {
  auto it = index_.find(label);
  if (it == index_.end())
    throw std::invalid_argument("Basis: unknown label " + to_string(label));
  return it->second;
}

BlockVectorExpr::BlockVectorExpr(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw std::invalid_argument("BlockVectorExpr: null basis");
  coeffs_.resize(static_cast<size_t>(basis_->blocks()));
}

BlockVectorExpr BlockVectorExpr::unit(BasisPtr basis, const BasisLabel& label) {
  BlockVectorExpr e(std::move(basis));
  int col = e.basis_->column(label);
  for (int l = 0; l < e.blocks(); ++l) e.coeffs_[static_cast<size_t>(l)][col] = 1.0;
  return e;
}

BlockVectorExpr BlockVectorExpr::unit_block(BasisPtr basis, const BasisLabel& label, int block) {
  BlockVectorExpr e(std::move(basis));
  int col = e.basis_->column(label);
  e.coeffs_.at(static_cast<size_t>(block))[col] = 1.0;
  return e;
}

bool BlockVectorExpr::is_zero() const {
  for (const auto& m : coeffs_)
    if (!m.empty()) return false;
  return true;
}

double BlockVectorExpr::coeff(int block, const BasisLabel& label) const {
  const auto& m = coeffs_.at(static_cast<size_t>(block));
  auto it = m.find(basis_->column(label));
  return it == m.end() ? 0.0 : it->second;
}

void BlockVectorExpr::add_term(int block, const BasisLabel& label, double coeff) {
  auto& m = coeffs_.at(static_cast<size_t>(block));
  int col = basis_->column(label);
  double v = (m.count(col) ? m[col] : 0.0) + coeff;
  if (v == 0.0)
    m.erase(col);
  else
    m[col] = v;
}

namespace {

void check_same_basis(const BasisPtr& a, const BasisPtr& b, const char* what) {
  if (a.get() != b.get())
    throw std::invalid_argument(std::string(what) + ": operands built over different bases");
}

template <typename Key>
void merge_scaled(std::map<Key, double>& into, const std::map<Key, double>& from, double scale) {
  for (const auto& [k, v] : from) {
    auto it = into.find(k);
    double sum = (it == into.end() ? 0.0 : it->second) + scale * v;
    if (sum == 0.0) {
      if (it != into.end()) into.erase(it);
    } else if (it == into.end()) {
      into.emplace(k, sum);
    } else {
      it->second = sum;
    }
  }
}

template <typename Key>
void scale_map(std::map<Key, double>& m, double scale) {
  if (scale == 0.0) {
    m.clear();
    return;
  }
  for (auto& [k, v] : m) v *= scale;
}

}  // namespace

BlockVectorExpr& BlockVectorExpr::operator+=(const BlockVectorExpr& other) {
  check_same_basis(basis_, other.basis_, "BlockVectorExpr::operator+=");
  for (int l = 0; l < blocks(); ++l)
    merge_scaled(coeffs_[static_cast<size_t>(l)], other.coeffs_[static_cast<size_t>(l)], 1.0);
  return *this;
}

BlockVectorExpr& BlockVectorExpr::operator-=(const BlockVectorExpr& other) {
  check_same_basis(basis_, other.basis_, "BlockVectorExpr::operator-=");
  for (int l = 0; l < blocks(); ++l)
    merge_scaled(coeffs_[static_cast<size_t>(l)], other.coeffs_[static_cast<size_t>(l)], -1.0);
  return *this;
}

BlockVectorExpr& BlockVectorExpr::operator*=(double scale) {
  for (auto& m : coeffs_) scale_map(m, scale);
  return *this;
}

ScalarExpr::ScalarExpr(BasisPtr basis) : basis_(std::move(basis)), constant_(0.0) {
  if (!basis_) throw std::invalid_argument("ScalarExpr: null basis");
  gram_.resize(static_cast<size_t>(basis_->blocks()));
}

ScalarExpr ScalarExpr::constant(BasisPtr basis, double value) {
  ScalarExpr e(std::move(basis));
  e.constant_ = value;
  return e;
}

ScalarExpr ScalarExpr::fval(BasisPtr basis, int symbol, double coeff) {
  ScalarExpr e(std::move(basis));
  if (coeff != 0.0) e.fvals_[symbol] = coeff;
  return e;
}

double ScalarExpr::gram_coeff(int block, const BasisLabel& a, const BasisLabel& b) const {
  int i = basis_->column(a), j = basis_->column(b);
  if (i > j) std::swap(i, j);
  const auto& m = gram_.at(static_cast<size_t>(block));
  auto it = m.find({i, j});
  return it == m.end() ? 0.0 : it->second;
}

bool ScalarExpr::is_zero() const {
  if (constant_ != 0.0 || !fvals_.empty()) return false;
  for (const auto& m : gram_)
    if (!m.empty()) return false;
  return true;
}

ScalarExpr& ScalarExpr::operator+=(const ScalarExpr& other) {
  if (!basis_) {
    *this = other;
    return *this;
  }
  if (other.basis_) check_same_basis(basis_, other.basis_, "ScalarExpr::operator+=");
  for (size_t l = 0; l < gram_.size(); ++l)
    if (l < other.gram_.size()) merge_scaled(gram_[l], other.gram_[l], 1.0);
  merge_scaled(fvals_, other.fvals_, 1.0);
  constant_ += other.constant_;
  return *this;
}

ScalarExpr& ScalarExpr::operator-=(const ScalarExpr& other) {
  if (!basis_) {
    *this = other;
    *this *= -1.0;
    return *this;
  }
  if (other.basis_) check_same_basis(basis_, other.basis_, "ScalarExpr::operator-=");
  for (size_t l = 0; l < gram_.size(); ++l)
    if (l < other.gram_.size()) merge_scaled(gram_[l], other.gram_[l], -1.0);
  merge_scaled(fvals_, other.fvals_, -1.0);
  constant_ -= other.constant_;
  return *this;
}

ScalarExpr& ScalarExpr::operator*=(double scale) {
  for (auto& m : gram_) scale_map(m, scale);
  scale_map(fvals_, scale);
  constant_ *= scale;
  return *this;
}

void ScalarExpr::add_gram_term(int block, int col_a, int col_b, double coeff) {
  if (coeff == 0.0) return;
  if (col_a > col_b) std::swap(col_a, col_b);
  auto& m = gram_.at(static_cast<size_t>(block));
  auto key = std::make_pair(col_a, col_b);
  double v = (m.count(key) ? m[key] : 0.0) + coeff;
  if (v == 0.0)
    m.erase(key);
  else
    m[key] = v;
}

void ScalarExpr::add_fval_term(int symbol, double coeff) {
  if (coeff == 0.0) return;
  double v = (fvals_.count(symbol) ? fvals_[symbol] : 0.0) + coeff;
  if (v == 0.0)
    fvals_.erase(symbol);
  else
    fvals_[symbol] = v;
}

namespace {

// <a^(l), b^(l)> as symmetric coefficients: diagonal a_i b_i, off-diagonal
// (a_i b_j + a_j b_i)/2 on the unordered pair.
void accumulate_block_inner(ScalarExpr& out, const BlockVectorExpr& a, const BlockVectorExpr& b,
                            int block) {
  for (const auto& [ca, va] : a.coeffs(block)) {
    for (const auto& [cb, vb] : b.coeffs(block)) {
      double w = va * vb;
      out.add_gram_term(block, ca, cb, ca == cb ? w : 0.5 * w);
    }
  }
}

}  // namespace

ScalarExpr inner_product(const BlockVectorExpr& a, const BlockVectorExpr& b) {
  check_same_basis(a.basis(), b.basis(), "inner_product");
  ScalarExpr out(a.basis());
  for (int l = 0; l < a.blocks(); ++l) accumulate_block_inner(out, a, b, l);
  return out;
}

ScalarExpr inner_product(const BlockVectorExpr& a, const BlockVectorExpr& b, int block) {
  check_same_basis(a.basis(), b.basis(), "inner_product");
  if (block < 0 || block >= a.blocks())
    throw std::invalid_argument("inner_product: block out of range");
  ScalarExpr out(a.basis());
  accumulate_block_inner(out, a, b, block);
  return out;
}

ScalarExpr weighted_norm_sq(const BlockVectorExpr& a, const std::vector<double>& weights) {
  if (static_cast<int>(weights.size()) != a.blocks())
    throw std::invalid_argument("weighted_norm_sq: weight length != number of blocks");
  ScalarExpr out(a.basis());
  for (int l = 0; l < a.blocks(); ++l) {
    if (weights[static_cast<size_t>(l)] == 0.0) continue;
    ScalarExpr term = inner_product(a, a, l);
    term *= weights[static_cast<size_t>(l)];
    out += term;
  }
  return out;
}

GramValues GramValues::from_columns(const std::vector<Eigen::MatrixXd>& columns,
                                    const Eigen::VectorXd& fvals) {
  GramValues v;
  v.gram.reserve(columns.size());
  for (const auto& P : columns) v.gram.push_back(P.transpose() * P);
  v.fvals = fvals;
  return v;
}

double evaluate(const ScalarExpr& expr, const GramValues& values) {
  double acc = expr.constant_term();
  if (!expr.basis()) return acc;
  for (int l = 0; l < expr.basis()->blocks(); ++l) {
    const auto& G = values.gram.at(static_cast<size_t>(l));
    for (const auto& [key, coeff] : expr.gram_terms(l)) {
      double g = G(key.first, key.second);
      acc += (key.first == key.second) ? coeff * g : 2.0 * coeff * g;
    }
  }
  for (const auto& [sym, coeff] : expr.fval_terms()) acc += coeff * values.fvals(sym);
  return acc;
}

Eigen::VectorXd evaluate(const BlockVectorExpr& expr, const Eigen::MatrixXd& block_columns,
                         int block) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(block_columns.rows());
  for (const auto& [col, coeff] : expr.coeffs(block)) out += coeff * block_columns.col(col);
  return out;
}

}  // namespace pepbcd
