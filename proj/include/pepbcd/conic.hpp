#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

// First-order conic solver for the solver contract behind pep::solve:
// minimize c'x subject to Ax + s = b, s in K, where K is a product of a
// zero cone, a nonnegative cone and dense PSD cones (svec coordinates).
// Douglas-Rachford splitting on the homogeneous self-dual embedding with
// diagonal equilibration and safeguarded Anderson acceleration. Small
// problems only; no attempt at exploiting sparsity beyond the KKT solve.

namespace pepbcd::conic {

struct ConeDims {
  int zero = 0;
  int nonneg = 0;
  std::vector<int> psd;  // matrix side lengths

  int psd_rows() const;
  int rows() const { return zero + nonneg + psd_rows(); }
};

struct ConeProblem {
  Eigen::SparseMatrix<double> A;  // rows ordered: zero, nonneg, psd blocks
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  ConeDims cones;
};

enum class ConeStatus { Optimal, Inaccurate, Infeasible, Unbounded, Failed };

std::string to_string(ConeStatus status);

struct ConeOptions {
  double eps = 1e-8;             // primal/dual residual and gap tolerance
  double eps_infeasible = 1e-9;  // certificate tolerance
  int max_iters = 300000;
  double alpha = 1.8;    // over-relaxation
  int aa_memory = 0;     // memory of the optional acceleration (0 disables)
  int check_interval = 20;
  bool equilibrate = true;
  int ruiz_iters = 12;
  double rho_bc = 1.0;   // extra c-vs-b scale: b *= rho, c /= rho
  int verbose = 0;       // progress print interval (0 silent)
  bool polish = true;    // active-set/face refinement once moderately accurate
  double polish_trigger = 2e-5;
  std::optional<Eigen::VectorXd> warm_start;  // previous solution's w vector
};

struct ConeSolution {
  ConeStatus status = ConeStatus::Failed;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd s;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  int iters = 0;
  Eigen::VectorXd w;  // internal state, reusable as a warm start
};

ConeSolution solve_cone(const ConeProblem& problem, const ConeOptions& options = {});

// svec packing: column-major upper triangle with off-diagonal entries
// scaled by sqrt(2), so that <A,B> = svec(A)'svec(B).
int svec_dim(int n);
Eigen::VectorXd svec(const Eigen::MatrixXd& S);
Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int n);

}  // namespace pepbcd::conic
