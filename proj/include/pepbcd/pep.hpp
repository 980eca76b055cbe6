#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pepbcd/algos.hpp"
#include "pepbcd/conic.hpp"
#include "pepbcd/core.hpp"
#include "pepbcd/interp.hpp"

// PEP assembly and post-processing: relaxed performance-estimation problems
// over the necessary interpolation conditions, with p PSD Gram blocks and a
// free function-value vector, solved through the conic solver contract.

namespace pepbcd {

enum class SettingKind { All, Init, GradNormalized };

/// Initial-condition regime. All: ||x_{pk} - x_*|| <= R for every cycle end
/// k = 1..K (plain norm). Init: ||x_0 - x_*||_L <= R (L-weighted norm).
/// GradNormalized: ||grad f(x_0)||^2 = radius^2 (equality).
struct Setting {
  SettingKind kind = SettingKind::Init;
  double radius = 1.0;
  bool include_cycle_zero = false;  // opt-in k=0 constraint for Setting All

  static Setting all(double R) { return {SettingKind::All, R, false}; }
  static Setting init(double R) { return {SettingKind::Init, R, false}; }
  static Setting grad_normalized(double level = 1.0) {
    return {SettingKind::GradNormalized, level, false};
  }
};

std::string to_string(SettingKind kind);
std::optional<SettingKind> parse_setting(const std::string& name);

enum class CriterionKind { FinalValueGap, CycleDecrease, MinGradDualNorm };

/// FinalValueGap: maximize f_N - f_*. CycleDecrease: minimize f_first -
/// f_last (descent lemmas). MinGradDualNorm: epigraph t <= ||g_i||_L^*2 over
/// the interior iterates i = 1..N-1, maximize t.
struct Criterion {
  CriterionKind kind = CriterionKind::FinalValueGap;

  static Criterion final_gap() { return {CriterionKind::FinalValueGap}; }
  static Criterion cycle_decrease() { return {CriterionKind::CycleDecrease}; }
  static Criterion min_grad_dual_norm() { return {CriterionKind::MinGradDualNorm}; }
};

enum class ConstraintTag { Interpolation, Structural, Setting, Normalization, Epigraph, Extra };

struct PepConstraint {
  ScalarExpr expr;  // required >= 0, or = 0 when equality
  bool equality = false;
  ConstraintTag tag = ConstraintTag::Extra;
  std::string name;
};

struct SdpProblem {
  BasisPtr basis;
  int blocks = 0;
  int gram_dim = 0;
  int num_fvals = 0;
  std::vector<PepConstraint> constraints;
  ScalarExpr objective;
  bool maximize = true;
  std::map<std::string, std::string> metadata;

  void add(ScalarExpr expr, bool equality, ConstraintTag tag, std::string name) {
    constraints.push_back({std::move(expr), equality, tag, std::move(name)});
  }
  int count(ConstraintTag tag) const;
};

/// Interpolation + structural + setting constraints, f_* = 0 normalization
/// baked in, objective per criterion. The setting may be omitted for
/// problems normalized through extra constraints instead (descent lemmas).
SdpProblem assemble_pep(const Trajectory& traj, const std::optional<Setting>& setting,
                        const Criterion& criterion, const LipschitzVector& L);

/// Expectation PEP over a sequence tree: shared x_0 and optimal point,
/// interpolation over all node triplets, objective sum_r P_r (f_{N,r}-f_*).
SdpProblem assemble_random_pep(const SequenceTree& tree, const Setting& setting,
                               const Criterion& criterion, const LipschitzVector& L);

enum class SolveStatus { Optimal, Inaccurate, Infeasible, Unbounded, Failed };

std::string to_string(SolveStatus status);

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 300000;
  double alpha = 1.8;
  int aa_memory = 0;
  double rho_bc = 1.0;
  int verbose = 0;
  std::optional<Eigen::VectorXd> warm_start;

  conic::ConeOptions cone_options() const;
};

/// Default tolerance comes from PEPBCD_SOLVER_TOL when set.
double default_solver_tolerance();

struct SolverResult {
  SolveStatus status = SolveStatus::Failed;
  double value = 0.0;
  std::vector<Eigen::MatrixXd> gram;
  Eigen::VectorXd fvals;
  Eigen::VectorXd duals;  // one multiplier per constraint, problem order
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  int iters = 0;
  double seconds = 0.0;
  Eigen::VectorXd warm_start;  // internal state for warm starting follow-ups

  bool ok() const { return status == SolveStatus::Optimal; }
  /// Reported value + 10*tolerance, quoted as the safe side of the bound.
  double safe_bound() const { return value + 10.0 * tolerance; }
};

SolverResult solve(const SdpProblem& problem, const SolverOptions& options = {});

/// Sparse SDPA export (".dat-s"): p PSD blocks plus one diagonal block for
/// the split free scalars and inequality slacks. Deterministic output;
/// metadata (objective sense, constant offset) rides in comment lines.
void export_sdpa(const SdpProblem& problem, const std::string& path);

struct SdpaProblem {
  conic::ConeProblem cone;
  double objective_offset = 0.0;
  bool maximize = true;
  int m = 0;
  std::vector<int> block_sizes;  // negative entry = diagonal block

  double value_from(const conic::ConeSolution& sol) const;
};

/// Independent reader for the exported format; re-solving the parsed
/// problem must reproduce the writer's optimal value.
SdpaProblem read_sdpa(const std::string& path);

struct WorstCaseInstance {
  std::vector<NumericTriplet> triplets;  // aligned with the trajectory's set
  std::vector<int> block_dims;           // numerical Gram ranks
  double objective = 0.0;        // the solver value the instance attains
  double interp_residual = 0.0;  // most negative pairwise residual
  bool interp_pass = false;      // check_finite_set at 1e-6
};

/// Inverts the Gram lifting: per-block eigenfactorization with rank
/// truncation at 1e-9 * trace, explicit points and gradients rebuilt from
/// the factors. Throws if a Gram block is indefinite beyond tolerance.
WorstCaseInstance extract_worst_case(const SolverResult& result, const Trajectory& traj,
                                     const LipschitzVector& L);

struct CertificateReport {
  bool valid = false;
  double min_multiplier = 0.0;       // most negative inequality multiplier
  double aggregation_residual = 0.0; // max |fval coeff| and |constant| of the aggregate
  std::vector<double> min_eigenvalues;  // per-block floor of the PSD remainder
  double tolerance = 1e-6;
};

/// Verifies that the multiplier-weighted constraints minus the objective
/// aggregate to a sum of per-block PSD quadratic forms.
CertificateReport dual_certificate(const SolverResult& result, const SdpProblem& problem,
                                   double tolerance = 1e-6);

}  // namespace pepbcd
