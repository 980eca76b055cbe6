#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

// Symbolic linear algebra over per-block Gram bases. Every point, gradient
// and scalar quantity of a performance-estimation problem is represented
// here before SDP assembly. Block dimensions are never stored: one Gram
// matrix per coordinate block makes everything dimension-free.

namespace pepbcd {

struct BlockStructure {
  int p;  // number of coordinate blocks, >= 1

  explicit BlockStructure(int blocks) : p(blocks) {
    if (p < 1) throw std::invalid_argument("BlockStructure: p must be >= 1");
  }
};

/// Per-block smoothness constants L_1..L_p (curvature units).
class LipschitzVector {
 public:
  explicit LipschitzVector(std::vector<double> entries) : values_(std::move(entries)) {
    if (values_.empty()) throw std::invalid_argument("LipschitzVector: empty");
    for (double v : values_) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("LipschitzVector: entries must be positive and finite");
    }
  }
  static LipschitzVector uniform(int p, double value = 1.0) {
    return LipschitzVector(std::vector<double>(static_cast<size_t>(p), value));
  }

  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int l) const { return values_.at(static_cast<size_t>(l)); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

enum class BasisKind : uint8_t { Gradient, InitialPoint, Iterate };

// One column of the per-block matrix P^(l). `index` is the evaluation id for
// gradients, the iterate id for extended-basis iterate columns, and 0 for
// the initial point.
struct BasisLabel {
  BasisKind kind;
  int index;

  friend bool operator==(const BasisLabel& a, const BasisLabel& b) {
    return a.kind == b.kind && a.index == b.index;
  }
  friend bool operator<(const BasisLabel& a, const BasisLabel& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.index < b.index;
  }
};

std::string to_string(const BasisLabel& label);

// Fixed, deterministic column layout shared by all blocks of one problem:
// gradients g_0..g_N in evaluation order, then x_0, then (extended basis
// only) x_1..x_N. Value symbols are indexed separately.
class Basis {
 public:
  Basis(int blocks, std::vector<BasisLabel> columns);

  static std::shared_ptr<const Basis> fixed_step(int blocks, int gradient_count);
  static std::shared_ptr<const Basis> extended(int blocks, int steps);

  int blocks() const { return blocks_; }
  int cols() const { return static_cast<int>(columns_.size()); }
  int column(const BasisLabel& label) const;
  bool has(const BasisLabel& label) const { return index_.count(label) > 0; }
  const BasisLabel& label(int col) const { return columns_.at(static_cast<size_t>(col)); }
  const std::vector<BasisLabel>& columns() const { return columns_; }

 private:
  int blocks_;
  std::vector<BasisLabel> columns_;
  std::map<BasisLabel, int> index_;
};

using BasisPtr = std::shared_ptr<const Basis>;

/// A symbolic point or gradient: per block, a sparse coefficient map over
/// that block's basis columns. Arithmetic is exact coefficient arithmetic
/// with exact-zero pruning (coefficients are algorithm step sizes, never
/// noisy data, so no epsilon pruning).
class BlockVectorExpr {
 public:
  BlockVectorExpr() = default;  // placeholder; assign before use
  explicit BlockVectorExpr(BasisPtr basis);

  /// Coefficient 1 on `label` in every block (a full vector such as x_0 or
  /// the gradient vector of one evaluation).
  static BlockVectorExpr unit(BasisPtr basis, const BasisLabel& label);
  /// Coefficient 1 on `label` in `block` only (a partial gradient U_l g^(l)).
  static BlockVectorExpr unit_block(BasisPtr basis, const BasisLabel& label, int block);

  const BasisPtr& basis() const { return basis_; }
  int blocks() const { return basis_->blocks(); }
  bool is_zero() const;
  const std::map<int, double>& coeffs(int block) const {
    return coeffs_.at(static_cast<size_t>(block));
  }
  double coeff(int block, const BasisLabel& label) const;

  BlockVectorExpr& operator+=(const BlockVectorExpr& other);
  BlockVectorExpr& operator-=(const BlockVectorExpr& other);
  BlockVectorExpr& operator*=(double scale);
  friend BlockVectorExpr operator+(BlockVectorExpr a, const BlockVectorExpr& b) { return a += b; }
  friend BlockVectorExpr operator-(BlockVectorExpr a, const BlockVectorExpr& b) { return a -= b; }
  friend BlockVectorExpr operator*(double scale, BlockVectorExpr a) { return a *= scale; }

  friend bool operator==(const BlockVectorExpr& a, const BlockVectorExpr& b) {
    return a.coeffs_ == b.coeffs_;
  }

  void add_term(int block, const BasisLabel& label, double coeff);

 private:
  BasisPtr basis_;
  std::vector<std::map<int, double>> coeffs_;  // block -> (column -> coefficient)
};

/// An affine functional of Gram inner products and function-value symbols:
/// the atom of every PEP constraint and objective. Gram coefficients are
/// stored as symmetric matrices (canonical upper triangle, A(i,j)=A(j,i)),
/// so the encoded value is sum_ij A_ij G_ij per block.
class ScalarExpr {
 public:
  ScalarExpr() : constant_(0.0) {}
  explicit ScalarExpr(BasisPtr basis);

  static ScalarExpr constant(BasisPtr basis, double value);
  static ScalarExpr fval(BasisPtr basis, int symbol, double coeff = 1.0);

  const BasisPtr& basis() const { return basis_; }
  double constant_term() const { return constant_; }
  const std::map<std::pair<int, int>, double>& gram_terms(int block) const {
    return gram_.at(static_cast<size_t>(block));
  }
  const std::map<int, double>& fval_terms() const { return fvals_; }
  /// Symmetric coefficient on (a,b); order of the pair does not matter.
  double gram_coeff(int block, const BasisLabel& a, const BasisLabel& b) const;
  bool is_zero() const;

  ScalarExpr& operator+=(const ScalarExpr& other);
  ScalarExpr& operator-=(const ScalarExpr& other);
  ScalarExpr& operator*=(double scale);
  friend ScalarExpr operator+(ScalarExpr a, const ScalarExpr& b) { return a += b; }
  friend ScalarExpr operator-(ScalarExpr a, const ScalarExpr& b) { return a -= b; }
  friend ScalarExpr operator*(double scale, ScalarExpr a) { return a *= scale; }

  friend bool operator==(const ScalarExpr& a, const ScalarExpr& b) {
    return a.gram_ == b.gram_ && a.fvals_ == b.fvals_ && a.constant_ == b.constant_;
  }

  void add_gram_term(int block, int col_a, int col_b, double coeff);
  void add_fval_term(int symbol, double coeff);
  void add_constant(double value) { constant_ += value; }

 private:
  BasisPtr basis_;
  std::vector<std::map<std::pair<int, int>, double>> gram_;  // upper triangle
  std::map<int, double> fvals_;
  double constant_;
};

/// Exact bilinear expansion <a,b>, restricted to one block when given.
ScalarExpr inner_product(const BlockVectorExpr& a, const BlockVectorExpr& b);
ScalarExpr inner_product(const BlockVectorExpr& a, const BlockVectorExpr& b, int block);

/// sum_l weights_l <a^(l), a^(l)>. Weights L give ||a||_L^2, weights 1/L the
/// dual norm ||a||_L^*2.
ScalarExpr weighted_norm_sq(const BlockVectorExpr& a, const std::vector<double>& weights);

// One labeled (point, gradient, value) triple of the interpolation set.
// fval == kStarValue marks the optimal-point triplet whose value is fixed
// to 0 by the translation normalization.
struct Triplet {
  static constexpr int kStarValue = -1;

  BlockVectorExpr point;
  BlockVectorExpr gradient;
  int fval;
  std::string name;

  bool is_star() const { return fval == kStarValue; }
};

/// Numeric assignment for every symbol of a basis: per-block Gram matrices
/// plus the function-value vector.
struct GramValues {
  std::vector<Eigen::MatrixXd> gram;
  Eigen::VectorXd fvals;

  /// Gram matrices of explicit per-block column vectors P^(l) (columns in
  /// basis order): G^(l) = P^(l)^T P^(l).
  static GramValues from_columns(const std::vector<Eigen::MatrixXd>& columns,
                                 const Eigen::VectorXd& fvals);
};

double evaluate(const ScalarExpr& expr, const GramValues& values);
Eigen::VectorXd evaluate(const BlockVectorExpr& expr, const Eigen::MatrixXd& block_columns,
                         int block);

}  // namespace pepbcd
