#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pepbcd/pep.hpp"

// High-level worst-case studies: bound computation with closed-form
// comparators, the descent-lemma pipeline, step-size sweeps and executable
// verification of the structural theorems.

namespace pepbcd {

struct BoundReport {
  MethodSpec method;
  std::optional<Setting> setting;
  std::vector<double> lipschitz;
  double value = 0.0;
  SolveStatus status = SolveStatus::Failed;
  double tolerance = 0.0;
  int iters = 0;
  double seconds = 0.0;
  // comparators, attached only when their hypotheses hold
  std::optional<double> beck_bound;
  std::optional<double> am_comparator;
  std::optional<double> gd_lower_bound;
};

/// Assembles, solves and reports one worst-case bound. `with_lower_bound`
/// adds the p x GD comparator (one extra single-block solve).
BoundReport worst_case(const MethodSpec& method, const Setting& setting,
                       const LipschitzVector& L, const SolverOptions& options = {},
                       bool with_lower_bound = false);

/// 4 L_max (1 + p^3 L_max^2/L_min^2) R_a^2 / (K + 8/p); valid for steps 1/L_l
/// under the bounded-cycle-iterates assumption.
double beck_ccd_bound(int p, int K, const LipschitzVector& L, double Ra);

/// 2 min{L_1,L_2} R_a^2 / (K-1) for the 2-block alternating minimization,
/// K >= 2.
double am_bound(int K, const LipschitzVector& L, double Ra);

/// 4 p^2 R^2 / (N-1+2p)^2 with R^2 = (1-1/p)(f(x_0)-f_*) + 0.5||x_0-x_*||_L^2.
double racd_expected_bound(int p, int N, double f0_gap, double init_L_dist_sq);

/// p times the worst case of gradient descent over pK steps with the
/// cyclically repeated relative step sizes (the lower-bound construction).
double lower_bound_ccd(int p, int K, const std::vector<double>& gamma_rel,
                       const SolverOptions& options = {});

struct ScaleInvarianceReport {
  double value_weighted = 0.0;  // problem (L, gamma_l / L_l)
  double value_unit = 0.0;      // problem ((1,..,1), gamma_l)
  double relative_gap = 0.0;
  bool pass = false;
};

/// Solves the PEP twice, with (L, gamma/L) and with unit constants, and
/// checks the optimal values agree to 1e-6 relative.
ScaleInvarianceReport verify_scale_invariance(int p, int K, const std::vector<double>& gamma_rel,
                                              const LipschitzVector& L,
                                              const SolverOptions& options = {});

/// Optimal constant of the one-cycle descent lemma
/// f(x_0) - f(x_p) >= C * ||grad f(x_0)||^2 / 2 for CCD(1/L_l), computed by
/// minimizing the cycle decrease under a unit gradient-energy normalization.
double descent_lemma_constant(int p, const LipschitzVector& L, const SolverOptions& options = {});

/// Per-cycle bounds (1/C) R^2 / (k + m), m = 2/(p L_max C), for k = 1..K.
std::vector<double> semi_analytic_bound(double C, int p, int K, const LipschitzVector& L,
                                        double R);

struct TwoBlockDescentReport {
  std::vector<double> values;  // per updated block
  std::vector<double> lemma_bounds;
  bool pass = false;
};

/// One CCD step on each block l, minimizing f(x_0)-f(x_1) under
/// ||g_0^(l)||^2 + ||g_1^(l)||^2 = 1; the value must reach 1/(2 L_l).
TwoBlockDescentReport verify_two_block_descent(const LipschitzVector& L,
                                               const SolverOptions& options = {});

struct ResidualBoundReport {
  double value = 0.0;
  double theorem_bound = 0.0;
  bool pass = false;
};

/// max t s.t. t <= ||g_i||_L^*2 for i = 1..2K-1 under f_0 - f_{2K} <= 1 for
/// the 2-block CCD(1/L_l); must not exceed 2/(2K-1).
ResidualBoundReport verify_residual_bound(int K, const LipschitzVector& L,
                                          const SolverOptions& options = {});

struct StepSearchResult {
  double gamma_star = 0.0;
  double best_bound = 0.0;
  std::vector<std::pair<double, double>> table;  // (gamma, bound) over the grid
};

/// Grid search over relative step sizes (unit constants, Setting INIT),
/// followed by successive parabolic refinement inside the best bracket.
StepSearchResult optimal_step_search(int p, int K, const std::vector<double>& grid,
                                     const SolverOptions& options = {}, int jobs = 1);

std::vector<double> default_step_grid();

struct BlowupReport {
  double eps = 0.0;
  int cycles = 0;
  std::vector<std::array<double, 2>> iterates;  // (x, y) after each cycle
  double Ra = 0.0;
  double lipschitz = 0.0;  // per-block constant 2(1+eps)
  double beck_bound = 0.0;
};

/// Closed-form 2-block CCD run on f_eps(x,y) = (x-y)^2 + eps(x^2+y^2) from
/// (1,-1) with step 1/(2(1+eps)); reports the cycle iterates, the
/// bounded-iterates radius and the resulting Setting-ALL bound.
BlowupReport blowup_example(double eps, int K);

/// Replays the method numerically on a reconstructed instance (gradients
/// looked up from the instance along its own trajectory) and returns the
/// visited function values. Throws if the replayed trajectory departs from
/// the instance by more than `tol`.
std::vector<double> numeric_replay(const MethodSpec& method, const WorstCaseInstance& instance,
                                   double tol = 1e-6);

/// A differentiable test function: value plus per-block gradients.
using FunctionOracle =
    std::function<double(const std::vector<Eigen::VectorXd>& x, std::vector<Eigen::VectorXd>* g)>;

/// Runs a fixed-step method on an explicit oracle (AM is not replayable
/// this way: the block minimizations have no generic oracle).
std::vector<double> numeric_replay(const MethodSpec& method,
                                   const std::vector<Eigen::VectorXd>& x0,
                                   const FunctionOracle& oracle);

/// Coefficient of determination of the least-squares line through (x, y).
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pepbcd
