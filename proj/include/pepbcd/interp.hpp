#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pepbcd/core.hpp"

// Necessary interpolation inequalities for the class of coordinate-wise
// smooth convex functions, their evaluation on explicit finite data sets,
// and the exact two-point interpolant. The pairwise conditions are
// necessary but not sufficient for three or more triplets, so a passing
// check never certifies interpolability.

namespace pepbcd {

/// Explicit-coordinate counterpart of Triplet: a point, its gradient and a
/// function value, both vectors partitioned into p blocks.
struct NumericTriplet {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> g;
  double f;

  int blocks() const { return static_cast<int>(x.size()); }
};

/// f_i - f_j - sum_s <g_j^(s), x_i^(s)-x_j^(s)> - 1/(2 L_l) ||g_i^(l)-g_j^(l)||^2,
/// required >= 0 in the PEP. One instance per ordered pair (i,j), i != j,
/// per block l.
struct InterpConstraint {
  int i;
  int j;
  int block;
  ScalarExpr expr;
};

/// All p*n*(n-1) pairwise constraints for n triplets over a shared basis.
std::vector<InterpConstraint> generate_interp_constraints(const std::vector<Triplet>& triplets,
                                                          const LipschitzVector& L);

struct InterpCheckReport {
  struct Violation {
    int i;
    int j;
    int block;
    double residual;
  };

  bool pass = true;
  double worst_residual = 0.0;  // most negative residual seen (0 if none negative)
  std::vector<Violation> violations;
};

/// Evaluates every ordered-pair inequality on explicit data; passes iff all
/// residuals are >= -tol. Default tol matches double-precision SDP solver
/// accuracy downstream.
InterpCheckReport check_finite_set(const std::vector<NumericTriplet>& triplets,
                                   const LipschitzVector& L, double tol = 1e-8);

/// Exact interpolant of two triplets satisfying the pairwise conditions:
/// the biconjugate of the segment-supported quadratic conjugate. Evaluation
/// solves a 1-D concave quadratic maximization over [0,1] in closed form.
/// f(x_i) = f_i and g_i is a subgradient at x_i for both samples.
class TwoPointInterpolant {
 public:
  /// Throws std::invalid_argument if the pair violates the pairwise
  /// conditions (the construction is then invalid).
  TwoPointInterpolant(NumericTriplet t1, NumericTriplet t2, const LipschitzVector& L);

  double value(const std::vector<Eigen::VectorXd>& x) const;
  std::vector<Eigen::VectorXd> subgradient(const std::vector<Eigen::VectorXd>& x) const;
  NumericTriplet sample(const std::vector<Eigen::VectorXd>& x) const;

 private:
  double maximizer(const std::vector<Eigen::VectorXd>& x) const;

  NumericTriplet a_, b_;  // roles ordered so the quadratic coefficient is >= 0
  double quad_ = 0.0;     // f_1 - f_2 - <g_2, x_1 - x_2>
  double lin_ = 0.0;      // <x_1, g_2 - g_1>
  double off_ = 0.0;      // <g_1, x_1> - f_1
};

struct TripletSet {
  LipschitzVector L;
  std::vector<NumericTriplet> points;
};

/// Reads {"L": [..], "points": [{"x": [[..],[..]], "g": [[..],[..]], "f": v}, ...]}.
TripletSet load_triplet_set(const std::string& path);
TripletSet parse_triplet_set(const std::string& json_text);

/// The three-point set that satisfies every pairwise condition yet is not
/// interpolable (pairwise passing is necessary only).
TripletSet counterexample_triplets();

}  // namespace pepbcd
