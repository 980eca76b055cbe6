#include "pepbcd/pep.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdlib>

namespace pepbcd {

std::string to_string(SettingKind kind) {
  switch (kind) {
    case SettingKind::All:
      return "all";
    case SettingKind::Init:
      return "init";
    case SettingKind::GradNormalized:
      return "gradnorm";
  }
  return "?";
}

std::optional<SettingKind> parse_setting(const std::string& name) {
  if (name == "all") return SettingKind::All;
  if (name == "init") return SettingKind::Init;
  if (name == "gradnorm") return SettingKind::GradNormalized;
  return std::nullopt;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Inaccurate:
      return "inaccurate";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::Failed:
      return "failed";
  }
  return "?";
}

int SdpProblem::count(ConstraintTag tag) const {
  int n = 0;
  for (const auto& c : constraints)
    if (c.tag == tag) ++n;
  return n;
}

namespace {

void add_interp_constraints(SdpProblem& prob, const std::vector<Triplet>& triplets,
                            const LipschitzVector& L) {
  auto constraints = generate_interp_constraints(triplets, L);
  for (auto& ic : constraints) {
    std::string name = "interp[" + triplets[static_cast<size_t>(ic.i)].name + "," +
                       triplets[static_cast<size_t>(ic.j)].name + "," +
                       std::to_string(ic.block + 1) + "]";
    prob.add(std::move(ic.expr), false, ConstraintTag::Interpolation, std::move(name));
  }
}

void add_setting(SdpProblem& prob, const Setting& setting, const Trajectory& traj,
                 const LipschitzVector& L) {
  if (!(setting.radius > 0.0)) throw std::invalid_argument("Setting: radius must be positive");
  switch (setting.kind) {
    case SettingKind::All: {
      if (traj.cycles < 1)
        throw std::invalid_argument("Setting ALL requires a cycle-aligned trajectory");
      std::vector<double> ones(static_cast<size_t>(traj.blocks), 1.0);
      int k0 = setting.include_cycle_zero ? 0 : 1;
      for (int k = k0; k <= traj.cycles; ++k) {
        ScalarExpr expr = ScalarExpr::constant(traj.basis, setting.radius * setting.radius);
        expr -= weighted_norm_sq(traj.cycle_points[static_cast<size_t>(k)], ones);
        prob.add(std::move(expr), false, ConstraintTag::Setting,
                 "all[k=" + std::to_string(k) + "]");
      }
      break;
    }
    case SettingKind::Init: {
      ScalarExpr expr = ScalarExpr::constant(traj.basis, setting.radius * setting.radius);
      expr -= weighted_norm_sq(traj.iterates.front(), L.values());
      prob.add(std::move(expr), false, ConstraintTag::Setting, "init");
      break;
    }
    case SettingKind::GradNormalized: {
      std::vector<double> ones(static_cast<size_t>(traj.blocks), 1.0);
      ScalarExpr expr = weighted_norm_sq(traj.triplets.front().gradient, ones);
      expr -= ScalarExpr::constant(traj.basis, setting.radius * setting.radius);
      prob.add(std::move(expr), true, ConstraintTag::Normalization, "gradnorm");
      break;
    }
  }
}

std::vector<double> dual_weights(const LipschitzVector& L) {
  std::vector<double> w(static_cast<size_t>(L.size()));
  for (int l = 0; l < L.size(); ++l) w[static_cast<size_t>(l)] = 1.0 / L[l];
  return w;
}

}  // namespace

SdpProblem assemble_pep(const Trajectory& traj, const std::optional<Setting>& setting,
                        const Criterion& criterion, const LipschitzVector& L) {
  if (L.size() != traj.blocks) throw std::invalid_argument("assemble_pep: L length != blocks");
  SdpProblem prob;
  prob.basis = traj.basis;
  prob.blocks = traj.blocks;
  prob.gram_dim = traj.basis->cols();
  prob.num_fvals = traj.num_fvals;
  prob.metadata["method"] = to_string(traj.kind);
  prob.metadata["blocks"] = std::to_string(traj.blocks);
  prob.metadata["steps"] = std::to_string(traj.steps);
  if (setting) prob.metadata["setting"] = to_string(setting->kind);

  add_interp_constraints(prob, traj.triplets, L);
  for (const auto& sc : traj.structural)
    prob.add(sc.expr, sc.equality, ConstraintTag::Structural, sc.name);
  if (setting) add_setting(prob, *setting, traj, L);

  switch (criterion.kind) {
    case CriterionKind::FinalValueGap:
      prob.objective = ScalarExpr::fval(traj.basis, traj.final_fval);
      prob.maximize = true;
      break;
    case CriterionKind::CycleDecrease:
      prob.objective = ScalarExpr::fval(traj.basis, traj.first_fval) -
                       ScalarExpr::fval(traj.basis, traj.final_fval);
      prob.maximize = false;
      break;
    case CriterionKind::MinGradDualNorm: {
      int t_sym = prob.num_fvals++;
      auto w = dual_weights(L);
      int interior = 0;
      for (const auto& trip : traj.triplets) {
        if (trip.is_star() || trip.fval == traj.first_fval || trip.fval == traj.final_fval)
          continue;
        ScalarExpr expr = weighted_norm_sq(trip.gradient, w);
        expr -= ScalarExpr::fval(traj.basis, t_sym);
        prob.add(std::move(expr), false, ConstraintTag::Epigraph, "epi[" + trip.name + "]");
        ++interior;
      }
      if (interior == 0)
        throw std::invalid_argument("MinGradDualNorm: no interior iterates to bound");
      prob.objective = ScalarExpr::fval(traj.basis, t_sym);
      prob.maximize = true;
      break;
    }
  }
  return prob;
}

SdpProblem assemble_random_pep(const SequenceTree& tree, const Setting& setting,
                               const Criterion& criterion, const LipschitzVector& L) {
  if (criterion.kind != CriterionKind::FinalValueGap)
    throw std::invalid_argument("assemble_random_pep: only the final value gap is supported");
  if (setting.kind != SettingKind::Init)
    throw std::invalid_argument("assemble_random_pep: only Setting INIT is supported");
  if (L.size() != tree.blocks)
    throw std::invalid_argument("assemble_random_pep: L length != blocks");

  SdpProblem prob;
  prob.basis = tree.basis;
  prob.blocks = tree.blocks;
  prob.gram_dim = tree.basis->cols();
  prob.num_fvals = tree.num_fvals;
  prob.metadata["method"] = "racd";
  prob.metadata["blocks"] = std::to_string(tree.blocks);
  prob.metadata["steps"] = std::to_string(tree.steps);
  prob.metadata["setting"] = "init";

  std::vector<Triplet> triplets = tree.triplets;
  BlockVectorExpr zero(tree.basis);
  triplets.push_back({zero, zero, Triplet::kStarValue, "*"});
  add_interp_constraints(prob, triplets, L);

  ScalarExpr expr = ScalarExpr::constant(tree.basis, setting.radius * setting.radius);
  expr -= weighted_norm_sq(tree.initial_point, L.values());
  prob.add(std::move(expr), false, ConstraintTag::Setting, "init");

  ScalarExpr obj(tree.basis);
  for (int leaf : tree.leaves) {
    const auto& node = tree.nodes[static_cast<size_t>(leaf)];
    obj += node.reach_prob *
           ScalarExpr::fval(tree.basis, triplets[static_cast<size_t>(node.triplet)].fval);
  }
  prob.objective = std::move(obj);
  prob.maximize = true;
  return prob;
}

double default_solver_tolerance() {
  if (const char* env = std::getenv("PEPBCD_SOLVER_TOL")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v > 0.0 && v < 1.0) return v;
  }
  return 1e-8;
}

conic::ConeOptions SolverOptions::cone_options() const {
  conic::ConeOptions opts;
  opts.eps = tol;
  opts.max_iters = max_iters;
  opts.alpha = alpha;
  opts.aa_memory = aa_memory;
  opts.rho_bc = rho_bc;
  opts.verbose = verbose;
  opts.warm_start = warm_start;
  return opts;
}

namespace {

struct Lowering {
  conic::ConeProblem cone;
  std::vector<int> block_offset;  // svec offset of each Gram block in x
  int fval_offset = 0;
  int num_vars = 0;
  std::vector<int> row_of_constraint;  // PEP constraint -> cone row
  double obj_constant = 0.0;
  double obj_sign = 1.0;  // +1 when the cone objective is -objective (maximize)
};

// Variable layout: [svec(G_1); ...; svec(G_p); fvals]. Row layout:
// equalities, inequalities, PSD membership.
Lowering lower(const SdpProblem& prob) {
  Lowering low;
  const int p = prob.blocks;
  const int t = conic::svec_dim(prob.gram_dim);
  low.block_offset.resize(static_cast<size_t>(p));
  for (int l = 0; l < p; ++l) low.block_offset[static_cast<size_t>(l)] = l * t;
  low.fval_offset = p * t;
  low.num_vars = p * t + prob.num_fvals;

  const int m_eq = static_cast<int>(std::count_if(prob.constraints.begin(),
                                                  prob.constraints.end(),
                                                  [](const PepConstraint& c) { return c.equality; }));
  const int m_in = static_cast<int>(prob.constraints.size()) - m_eq;
  const int m_psd = p * t;
  const int m = m_eq + m_in + m_psd;

  low.cone.cones.zero = m_eq;
  low.cone.cones.nonneg = m_in;
  low.cone.cones.psd.assign(static_cast<size_t>(p), prob.gram_dim);
  low.cone.b = Eigen::VectorXd::Zero(m);
  low.cone.c = Eigen::VectorXd::Zero(low.num_vars);

  std::vector<Eigen::Triplet<double>> entries;
  low.row_of_constraint.resize(prob.constraints.size());

  auto svec_index = [&](int l, int i, int j) {
    // column-major upper triangle position of (i<=j)
    return low.block_offset[static_cast<size_t>(l)] + j * (j + 1) / 2 + i;
  };
  constexpr double kSqrt2 = 1.4142135623730951;

  auto emit_row = [&](int row, const ScalarExpr& expr, double scale) {
    for (int l = 0; l < p; ++l) {
      for (const auto& [key, coeff] : expr.gram_terms(l)) {
        double v = (key.first == key.second) ? coeff : kSqrt2 * coeff;
        entries.emplace_back(row, svec_index(l, key.first, key.second), scale * v);
      }
    }
    for (const auto& [sym, coeff] : expr.fval_terms())
      entries.emplace_back(row, low.fval_offset + sym, scale * coeff);
  };

  int eq_row = 0, in_row = m_eq;
  for (size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& pc = prob.constraints[i];
    int row = pc.equality ? eq_row++ : in_row++;
    low.row_of_constraint[i] = row;
    emit_row(row, pc.expr, -1.0);  // s = b - Ax = expr
    low.cone.b(row) = pc.expr.constant_term();
  }
  // PSD membership: s = x_G
  int row = m_eq + m_in;
  for (int l = 0; l < p; ++l) {
    for (int k = 0; k < t; ++k) {
      entries.emplace_back(row, low.block_offset[static_cast<size_t>(l)] + k, -1.0);
      ++row;
    }
  }

  low.obj_sign = prob.maximize ? 1.0 : -1.0;
  // cone minimizes c'x; maximize f <=> minimize -f
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(low.num_vars);
  {
    for (int l = 0; l < p; ++l) {
      for (const auto& [key, coeff] : prob.objective.gram_terms(l)) {
        double v = (key.first == key.second) ? coeff : kSqrt2 * coeff;
        obj(svec_index(l, key.first, key.second)) += v;
      }
    }
    for (const auto& [sym, coeff] : prob.objective.fval_terms())
      obj(low.fval_offset + sym) += coeff;
  }
  low.cone.c = prob.maximize ? Eigen::VectorXd(-obj) : obj;
  low.obj_constant = prob.objective.constant_term();

  low.cone.A.resize(m, low.num_vars);
  low.cone.A.setFromTriplets(entries.begin(), entries.end());
  low.cone.A.makeCompressed();
  return low;
}

SolveStatus map_status(conic::ConeStatus status) {
  switch (status) {
    case conic::ConeStatus::Optimal:
      return SolveStatus::Optimal;
    case conic::ConeStatus::Inaccurate:
      return SolveStatus::Inaccurate;
    case conic::ConeStatus::Infeasible:
      return SolveStatus::Infeasible;
    case conic::ConeStatus::Unbounded:
      return SolveStatus::Unbounded;
    case conic::ConeStatus::Failed:
      return SolveStatus::Failed;
  }
  return SolveStatus::Failed;
}

}  // namespace

SolverResult solve(const SdpProblem& problem, const SolverOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  Lowering low = lower(problem);
  conic::ConeSolution cs = conic::solve_cone(low.cone, options.cone_options());

  SolverResult result;
  result.status = map_status(cs.status);
  result.tolerance = options.tol;
  result.iters = cs.iters;
  result.primal_res = cs.primal_res;
  result.dual_res = cs.dual_res;
  result.gap = cs.gap;
  result.warm_start = cs.w;

  if (result.status == SolveStatus::Optimal || result.status == SolveStatus::Inaccurate) {
    const int t = conic::svec_dim(problem.gram_dim);
    result.gram.reserve(static_cast<size_t>(problem.blocks));
    for (int l = 0; l < problem.blocks; ++l)
      result.gram.push_back(conic::unsvec(
          cs.x.segment(low.block_offset[static_cast<size_t>(l)], t), problem.gram_dim));
    result.fvals = cs.x.segment(low.fval_offset, problem.num_fvals);
    GramValues gv{result.gram, result.fvals};
    result.value = evaluate(problem.objective, gv);
    result.duals.resize(static_cast<Eigen::Index>(problem.constraints.size()));
    for (size_t i = 0; i < problem.constraints.size(); ++i)
      result.duals(static_cast<Eigen::Index>(i)) = cs.y(low.row_of_constraint[i]);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

WorstCaseInstance extract_worst_case(const SolverResult& result, const Trajectory& traj,
                                     const LipschitzVector& L) {
  if (!(result.status == SolveStatus::Optimal || result.status == SolveStatus::Inaccurate))
    throw std::invalid_argument("extract_worst_case: solver result not optimal");

  WorstCaseInstance inst;
  const int p = traj.blocks;
  std::vector<Eigen::MatrixXd> factors(static_cast<size_t>(p));
  for (int l = 0; l < p; ++l) {
    const Eigen::MatrixXd& G = result.gram[static_cast<size_t>(l)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    double trace = std::max(G.trace(), 0.0);
    double floor = -1e-8 * std::max(1.0, trace);
    if (eig.eigenvalues().minCoeff() < floor)
      throw std::runtime_error("extract_worst_case: Gram block " + std::to_string(l + 1) +
                               " indefinite beyond tolerance (min eig " +
                               std::to_string(eig.eigenvalues().minCoeff()) + ")");
    double cut = 1e-9 * std::max(trace, 1e-300);
    std::vector<int> keep;
    for (int i = 0; i < eig.eigenvalues().size(); ++i)
      if (eig.eigenvalues()(i) > cut) keep.push_back(i);
    if (keep.empty()) keep.push_back(static_cast<int>(eig.eigenvalues().size()) - 1);
    Eigen::MatrixXd P(static_cast<Eigen::Index>(keep.size()), G.rows());
    for (size_t r = 0; r < keep.size(); ++r) {
      double lam = std::max(eig.eigenvalues()(keep[r]), 0.0);
      P.row(static_cast<Eigen::Index>(r)) =
          std::sqrt(lam) * eig.eigenvectors().col(keep[r]).transpose();
    }
    factors[static_cast<size_t>(l)] = P;
    inst.block_dims.push_back(static_cast<int>(keep.size()));
  }

  for (const auto& trip : traj.triplets) {
    NumericTriplet nt;
    nt.f = trip.is_star() ? 0.0 : result.fvals(trip.fval);
    for (int l = 0; l < p; ++l) {
      nt.x.push_back(evaluate(trip.point, factors[static_cast<size_t>(l)], l));
      nt.g.push_back(evaluate(trip.gradient, factors[static_cast<size_t>(l)], l));
    }
    inst.triplets.push_back(std::move(nt));
  }
  inst.objective = result.value;
  auto check = check_finite_set(inst.triplets, L, 1e-6);
  inst.interp_residual = check.worst_residual;
  inst.interp_pass = check.pass;
  return inst;
}

CertificateReport dual_certificate(const SolverResult& result, const SdpProblem& problem,
                                   double tolerance) {
  if (result.duals.size() != static_cast<Eigen::Index>(problem.constraints.size()))
    throw std::invalid_argument("dual_certificate: duals missing");

  CertificateReport report;
  report.tolerance = tolerance;

  // value - obj  ==  sum_i y_i expr_i + sum_l <S_l, G_l>   (maximize)
  // obj - value  ==  sum_i y_i expr_i + sum_l <S_l, G_l>   (minimize)
  ScalarExpr aggregate = ScalarExpr::constant(problem.basis, result.value);
  aggregate -= problem.objective;
  if (!problem.maximize) aggregate *= -1.0;
  double min_mult = 0.0;
  for (size_t i = 0; i < problem.constraints.size(); ++i) {
    double y = result.duals(static_cast<Eigen::Index>(i));
    if (!problem.constraints[i].equality) min_mult = std::min(min_mult, y);
    ScalarExpr scaled = problem.constraints[i].expr;
    scaled *= y;
    aggregate -= scaled;
  }
  report.min_multiplier = min_mult;

  double residual = std::abs(aggregate.constant_term());
  for (const auto& [sym, coeff] : aggregate.fval_terms())
    residual = std::max(residual, std::abs(coeff));
  report.aggregation_residual = residual;

  for (int l = 0; l < problem.blocks; ++l) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(problem.gram_dim, problem.gram_dim);
    for (const auto& [key, coeff] : aggregate.gram_terms(l)) {
      S(key.first, key.second) = coeff;
      S(key.second, key.first) = coeff;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    report.min_eigenvalues.push_back(eig.eigenvalues().minCoeff());
  }

  double min_eig = *std::min_element(report.min_eigenvalues.begin(), report.min_eigenvalues.end());
  report.valid = report.min_multiplier >= -1e-8 && report.aggregation_residual <= tolerance &&
                 min_eig >= -tolerance;
  return report;
}

}  // namespace pepbcd
