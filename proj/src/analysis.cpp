#include "pepbcd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

namespace pepbcd {

namespace {

bool inverse_lipschitz_steps(const MethodSpec& method, const LipschitzVector& L) {
  if (method.kind == MethodKind::Am) return true;
  if (!method.step_gamma.empty()) return false;
  if (static_cast<int>(method.schedule.gamma.size()) != L.size()) return false;
  for (int l = 0; l < L.size(); ++l)
    if (std::abs(method.schedule.gamma[static_cast<size_t>(l)] * L[l] - 1.0) > 1e-12) return false;
  return true;
}

}  // namespace

BoundReport worst_case(const MethodSpec& method, const Setting& setting, const LipschitzVector& L,
                       const SolverOptions& options, bool with_lower_bound) {
  Trajectory traj = run_method(method);
  SdpProblem prob = assemble_pep(traj, setting, Criterion::final_gap(), L);
  SolverResult res = solve(prob, options);

  BoundReport report;
  report.method = method;
  report.setting = setting;
  report.lipschitz = L.values();
  report.value = res.value;
  report.status = res.status;
  report.tolerance = res.tolerance;
  report.iters = res.iters;
  report.seconds = res.seconds;

  const bool unit_steps = inverse_lipschitz_steps(method, L);
  if (setting.kind == SettingKind::All && traj.cycles >= 1 && unit_steps) {
    if (method.kind == MethodKind::Ccd)
      report.beck_bound = beck_ccd_bound(method.blocks, traj.cycles, L, setting.radius);
    if (method.kind == MethodKind::Am && method.blocks == 2 && traj.cycles >= 2)
      report.am_comparator = am_bound(traj.cycles, L, setting.radius);
  }
  if (with_lower_bound && method.kind == MethodKind::Ccd && setting.kind == SettingKind::Init &&
      traj.cycles >= 1 && method.order.empty()) {
    std::vector<double> gamma_rel(static_cast<size_t>(method.blocks));
    bool relative_ok = !method.step_gamma.empty() ? false : true;
    for (int l = 0; l < method.blocks && relative_ok; ++l)
      gamma_rel[static_cast<size_t>(l)] = method.schedule.gamma[static_cast<size_t>(l)] * L[l];
    if (relative_ok) report.gd_lower_bound = lower_bound_ccd(method.blocks, traj.cycles, gamma_rel, options);
  }
  return report;
}

double beck_ccd_bound(int p, int K, const LipschitzVector& L, double Ra) {
  double lmax = L.max(), lmin = L.min();
  double ratio = lmax / lmin;
  return 4.0 * lmax * (1.0 + p * p * p * ratio * ratio) * Ra * Ra / (K + 8.0 / p);
}

double am_bound(int K, const LipschitzVector& L, double Ra) {
  if (K < 2) throw std::invalid_argument("am_bound: requires K >= 2");
  if (L.size() != 2) throw std::invalid_argument("am_bound: two blocks only");
  return 2.0 * L.min() * Ra * Ra / (K - 1);
}

double racd_expected_bound(int p, int N, double f0_gap, double init_L_dist_sq) {
  if (N < 1) throw std::invalid_argument("racd_expected_bound: N >= 1");
  double R2 = (1.0 - 1.0 / p) * f0_gap + 0.5 * init_L_dist_sq;
  double denom = N - 1.0 + 2.0 * p;
  return 4.0 * p * p * R2 / (denom * denom);
}

double lower_bound_ccd(int p, int K, const std::vector<double>& gamma_rel,
                       const SolverOptions& options) {
  if (static_cast<int>(gamma_rel.size()) != p)
    throw std::invalid_argument("lower_bound_ccd: gamma length != p");
  MethodSpec gd;
  gd.kind = MethodKind::Custom;
  gd.blocks = 1;
  gd.steps = p * K;
  gd.schedule = StepSchedule::absolute({1.0});
  gd.step_gamma.resize(static_cast<size_t>(p * K));
  for (int i = 0; i < p * K; ++i)
    gd.step_gamma[static_cast<size_t>(i)] = gamma_rel[static_cast<size_t>(i % p)];
  Trajectory traj = run_method(gd);
  SdpProblem prob =
      assemble_pep(traj, Setting::init(1.0), Criterion::final_gap(), LipschitzVector::uniform(1));
  SolverResult res = solve(prob, options);
  if (!res.ok() && res.status != SolveStatus::Inaccurate)
    throw std::runtime_error("lower_bound_ccd: solver " + to_string(res.status));
  return p * res.value;
}

ScaleInvarianceReport verify_scale_invariance(int p, int K, const std::vector<double>& gamma_rel,
                                              const LipschitzVector& L,
                                              const SolverOptions& options) {
  if (static_cast<int>(gamma_rel.size()) != p)
    throw std::invalid_argument("verify_scale_invariance: gamma length != p");
  auto run = [&](const LipschitzVector& consts, const std::vector<double>& gamma) {
    MethodSpec spec;
    spec.kind = MethodKind::Ccd;
    spec.blocks = p;
    spec.cycles = K;
    spec.schedule = StepSchedule::absolute(gamma);
    Trajectory traj = run_method(spec);
    SdpProblem prob = assemble_pep(traj, Setting::init(1.0), Criterion::final_gap(), consts);
    SolverResult res = solve(prob, options);
    if (!res.ok() && res.status != SolveStatus::Inaccurate)
      throw std::runtime_error("verify_scale_invariance: solver " + to_string(res.status));
    return res.value;
  };
  std::vector<double> scaled(static_cast<size_t>(p));
  for (int l = 0; l < p; ++l) scaled[static_cast<size_t>(l)] = gamma_rel[static_cast<size_t>(l)] / L[l];

  ScaleInvarianceReport report;
  report.value_weighted = run(L, scaled);
  report.value_unit = run(LipschitzVector::uniform(p), gamma_rel);
  double denom = std::max({std::abs(report.value_weighted), std::abs(report.value_unit), 1e-12});
  report.relative_gap = std::abs(report.value_weighted - report.value_unit) / denom;
  report.pass = report.relative_gap <= 1e-6;
  return report;
}

double descent_lemma_constant(int p, const LipschitzVector& L, const SolverOptions& options) {
  MethodSpec spec;
  spec.kind = MethodKind::Ccd;
  spec.blocks = p;
  spec.cycles = 1;
  spec.schedule = StepSchedule::inverse_lipschitz(L);
  spec.include_star = false;
  Trajectory traj = run_method(spec);
  // normalization: gradient energy ||grad f(x_0)||^2 / 2 = 1, the unit the
  // semi-analytic pipeline measures decrease against
  SdpProblem prob = assemble_pep(traj, Setting::grad_normalized(std::sqrt(2.0)),
                                 Criterion::cycle_decrease(), L);
  SolverResult res = solve(prob, options);
  if (!res.ok() && res.status != SolveStatus::Inaccurate)
    throw std::runtime_error("descent_lemma_constant: solver " + to_string(res.status));
  return res.value;
}

std::vector<double> semi_analytic_bound(double C, int p, int K, const LipschitzVector& L,
                                        double R) {
  if (!(C > 0.0)) throw std::invalid_argument("semi_analytic_bound: C must be positive");
  double m = 2.0 / (p * L.max() * C);
  std::vector<double> bounds;
  bounds.reserve(static_cast<size_t>(K));
  for (int k = 1; k <= K; ++k) bounds.push_back(R * R / (C * (k + m)));
  return bounds;
}

TwoBlockDescentReport verify_two_block_descent(const LipschitzVector& L,
                                               const SolverOptions& options) {
  if (L.size() != 2) throw std::invalid_argument("verify_two_block_descent: two blocks only");
  TwoBlockDescentReport report;
  report.pass = true;
  for (int l = 0; l < 2; ++l) {
    MethodSpec spec;
    spec.kind = MethodKind::Ccd;
    spec.blocks = 2;
    spec.steps = 1;
    spec.order = {l};
    spec.schedule = StepSchedule::inverse_lipschitz(L);
    spec.include_star = false;
    Trajectory traj = run_method(spec);
    SdpProblem prob = assemble_pep(traj, std::nullopt, Criterion::cycle_decrease(), L);
    ScalarExpr norm = inner_product(traj.triplets[0].gradient, traj.triplets[0].gradient, l);
    norm += inner_product(traj.triplets[1].gradient, traj.triplets[1].gradient, l);
    norm -= ScalarExpr::constant(traj.basis, 1.0);
    prob.add(std::move(norm), true, ConstraintTag::Normalization, "stepnorm");
    SolverResult res = solve(prob, options);
    if (!res.ok() && res.status != SolveStatus::Inaccurate)
      throw std::runtime_error("verify_two_block_descent: solver " + to_string(res.status));
    report.values.push_back(res.value);
    report.lemma_bounds.push_back(1.0 / (2.0 * L[l]));
    if (res.value < report.lemma_bounds.back() - 1e-6) report.pass = false;
  }
  return report;
}

ResidualBoundReport verify_residual_bound(int K, const LipschitzVector& L,
                                          const SolverOptions& options) {
  if (L.size() != 2) throw std::invalid_argument("verify_residual_bound: two blocks only");
  MethodSpec spec;
  spec.kind = MethodKind::Ccd;
  spec.blocks = 2;
  spec.cycles = K;
  spec.schedule = StepSchedule::inverse_lipschitz(L);
  spec.include_star = false;
  Trajectory traj = run_method(spec);
  SdpProblem prob = assemble_pep(traj, std::nullopt, Criterion::min_grad_dual_norm(), L);
  ScalarExpr decrease = ScalarExpr::constant(traj.basis, 1.0);
  decrease -= ScalarExpr::fval(traj.basis, traj.first_fval);
  decrease += ScalarExpr::fval(traj.basis, traj.final_fval);
  prob.add(std::move(decrease), false, ConstraintTag::Normalization, "decrease");
  SolverResult res = solve(prob, options);
  if (!res.ok() && res.status != SolveStatus::Inaccurate)
    throw std::runtime_error("verify_residual_bound: solver " + to_string(res.status));
  ResidualBoundReport report;
  report.value = res.value;
  report.theorem_bound = 2.0 / (2.0 * K - 1.0);
  report.pass = res.value <= report.theorem_bound + 1e-6;
  return report;
}

std::vector<double> default_step_grid() {
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double g = 0.10 + 0.05 * i;
    if (g > 2.0 + 1e-12) break;
    grid.push_back(g);
  }
  return grid;
}

namespace {

double ccd_bound_at_gamma(int p, int K, double gamma, const SolverOptions& options,
                          Eigen::VectorXd* warm) {
  MethodSpec spec;
  spec.kind = MethodKind::Ccd;
  spec.blocks = p;
  spec.cycles = K;
  spec.schedule = StepSchedule::absolute(std::vector<double>(static_cast<size_t>(p), gamma));
  Trajectory traj = run_method(spec);
  SdpProblem prob =
      assemble_pep(traj, Setting::init(1.0), Criterion::final_gap(), LipschitzVector::uniform(p));
  SolverOptions opts = options;
  if (warm && warm->size() > 0) opts.warm_start = *warm;
  SolverResult res = solve(prob, opts);
  if (!res.ok() && res.status != SolveStatus::Inaccurate)
    throw std::runtime_error("optimal_step_search: solver " + to_string(res.status));
  if (warm) *warm = res.warm_start;
  return res.value;
}

}  // namespace

StepSearchResult optimal_step_search(int p, int K, const std::vector<double>& grid,
                                     const SolverOptions& options, int jobs) {
  if (grid.size() < 3) throw std::invalid_argument("optimal_step_search: need at least 3 points");
  StepSearchResult result;
  result.table.resize(grid.size());

  jobs = std::max(1, jobs);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    Eigen::VectorXd warm;
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= grid.size()) break;
      double g = grid[i];
      double bound;
      try {
        bound = ccd_bound_at_gamma(p, K, g, options, &warm);
      } catch (const std::exception&) {
        bound = std::numeric_limits<double>::quiet_NaN();  // recorded, search continues
      }
      result.table[i] = {g, bound};
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  size_t best = 0;
  for (size_t i = 0; i < result.table.size(); ++i) {
    if (std::isnan(result.table[i].second)) continue;
    if (std::isnan(result.table[best].second) ||
        result.table[i].second < result.table[best].second)
      best = i;
  }
  double lo = result.table[best > 0 ? best - 1 : best].first;
  double hi = result.table[best + 1 < result.table.size() ? best + 1 : best].first;
  double xa = lo, xb = result.table[best].first, xc = hi;
  double fa = ccd_bound_at_gamma(p, K, xa, options, nullptr);
  double fb = result.table[best].second;
  double fc = ccd_bound_at_gamma(p, K, xc, options, nullptr);

  // successive parabolic interpolation inside the bracket; the bound curve
  // can have a kink at the optimum, so iterate rather than trust one fit
  for (int it = 0; it < 10 && (xc - xa) > 2e-3; ++it) {
    double d1 = (xb - xa) * (fb - fc);
    double d2 = (xb - xc) * (fb - fa);
    double denom = 2.0 * (d1 - d2);
    double x_new;
    if (std::abs(denom) < 1e-14) {
      x_new = 0.5 * (xa + xc);
    } else {
      x_new = xb - ((xb - xa) * d1 - (xb - xc) * d2) / denom;
      x_new = std::clamp(x_new, xa + 1e-4, xc - 1e-4);
    }
    if (std::abs(x_new - xb) < 1e-5) x_new = 0.5 * (xa + xc) < xb ? 0.5 * (xa + xb) : 0.5 * (xb + xc);
    double f_new = ccd_bound_at_gamma(p, K, x_new, options, nullptr);
    if (x_new < xb) {
      if (f_new <= fb) {
        xc = xb;
        fc = fb;
        xb = x_new;
        fb = f_new;
      } else {
        xa = x_new;
        fa = f_new;
      }
    } else {
      if (f_new <= fb) {
        xa = xb;
        fa = fb;
        xb = x_new;
        fb = f_new;
      } else {
        xc = x_new;
        fc = f_new;
      }
    }
  }
  result.gamma_star = xb;
  result.best_bound = fb;
  return result;
}

BlowupReport blowup_example(double eps, int K) {
  if (!(eps > 0.0)) throw std::invalid_argument("blowup_example: eps must be positive");
  BlowupReport report;
  report.eps = eps;
  report.cycles = K;
  report.lipschitz = 2.0 * (1.0 + eps);
  double x = 1.0, y = -1.0;
  double worst = 0.0;
  for (int k = 1; k <= K; ++k) {
    double x_next = y / (1.0 + eps);
    double y_next = y / ((1.0 + eps) * (1.0 + eps));
    x = x_next;
    y = y_next;
    report.iterates.push_back({x, y});
    worst = std::max(worst, std::sqrt(x * x + y * y));
  }
  report.Ra = worst;
  report.beck_bound =
      beck_ccd_bound(2, K, LipschitzVector::uniform(2, report.lipschitz), report.Ra);
  return report;
}

namespace {

double block_distance(const std::vector<Eigen::VectorXd>& a,
                      const std::vector<Eigen::VectorXd>& b) {
  double acc = 0.0;
  for (size_t l = 0; l < a.size(); ++l) acc += (a[l] - b[l]).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace

std::vector<double> numeric_replay(const MethodSpec& method, const WorstCaseInstance& instance,
                                   double tol) {
  const int p = method.blocks;
  const int N = method.resolved_steps();
  const auto order = method.resolved_order();
  const auto& ts = instance.triplets;
  std::vector<double> values;

  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error("numeric_replay: " + what);
  };

  switch (method.kind) {
    case MethodKind::Ccd:
    case MethodKind::Custom: {
      require(static_cast<int>(ts.size()) >= N + 1, "instance too small");
      std::vector<Eigen::VectorXd> x = ts[0].x;
      for (int i = 0; i <= N; ++i) {
        require(block_distance(x, ts[static_cast<size_t>(i)].x) <= tol,
                "trajectory departs from the instance at step " + std::to_string(i));
        values.push_back(ts[static_cast<size_t>(i)].f);
        if (i == N) break;
        int l = order[static_cast<size_t>(i)];
        double gamma = method.step_gamma.empty()
                           ? method.schedule.gamma.at(static_cast<size_t>(l))
                           : method.step_gamma[static_cast<size_t>(i)];
        x[static_cast<size_t>(l)] -= gamma * ts[static_cast<size_t>(i)].g[static_cast<size_t>(l)];
      }
      break;
    }
    case MethodKind::Cacd: {
      require(static_cast<int>(ts.size()) >= N + 1, "instance too small");
      const auto theta = theta_schedule(p, N);
      std::vector<Eigen::VectorXd> x = ts[0].x, z = ts[0].x;
      for (int i = 1; i <= N; ++i) {
        double th = theta[static_cast<size_t>(i - 1)];
        std::vector<Eigen::VectorXd> y(x.size());
        for (size_t l = 0; l < x.size(); ++l) y[l] = (1.0 - th) * x[l] + th * z[l];
        require(block_distance(y, ts[static_cast<size_t>(i - 1)].x) <= tol,
                "y-point departs from the instance at step " + std::to_string(i));
        values.push_back(ts[static_cast<size_t>(i - 1)].f);
        int l = order[static_cast<size_t>(i - 1)];
        double gamma = method.schedule.gamma.at(static_cast<size_t>(l));
        const Eigen::VectorXd& g = ts[static_cast<size_t>(i - 1)].g[static_cast<size_t>(l)];
        z[static_cast<size_t>(l)] -= (gamma / (p * th)) * g;
        x = y;
        x[static_cast<size_t>(l)] -= gamma * g;
      }
      require(block_distance(x, ts[static_cast<size_t>(N)].x) <= tol,
              "final iterate departs from the instance");
      values.push_back(ts[static_cast<size_t>(N)].f);
      break;
    }
    case MethodKind::Am: {
      require(static_cast<int>(ts.size()) >= N + 1, "instance too small");
      for (int i = 0; i <= N; ++i) values.push_back(ts[static_cast<size_t>(i)].f);
      for (int i = 1; i <= N; ++i) {
        int l = order[static_cast<size_t>(i - 1)];
        require(ts[static_cast<size_t>(i)].g[static_cast<size_t>(l)].norm() <= tol,
                "block stationarity violated at step " + std::to_string(i));
        for (int s = 0; s < p; ++s) {
          if (s == l) continue;
          require((ts[static_cast<size_t>(i)].x[static_cast<size_t>(s)] -
                   ts[static_cast<size_t>(i - 1)].x[static_cast<size_t>(s)])
                          .norm() <= tol,
                  "off-block moved at step " + std::to_string(i));
        }
        require(ts[static_cast<size_t>(i)].f <= ts[static_cast<size_t>(i - 1)].f + tol,
                "block minimization increased the objective");
      }
      break;
    }
  }
  return values;
}

std::vector<double> numeric_replay(const MethodSpec& method,
                                   const std::vector<Eigen::VectorXd>& x0,
                                   const FunctionOracle& oracle) {
  if (method.kind == MethodKind::Am)
    throw std::invalid_argument("numeric_replay: AM needs exact block minimizers, not an oracle");
  const int p = method.blocks;
  const int N = method.resolved_steps();
  const auto order = method.resolved_order();
  std::vector<double> values;
  std::vector<Eigen::VectorXd> g(static_cast<size_t>(p));

  if (method.kind == MethodKind::Cacd) {
    const auto theta = theta_schedule(p, N);
    std::vector<Eigen::VectorXd> x = x0, z = x0;
    for (int i = 1; i <= N; ++i) {
      double th = theta[static_cast<size_t>(i - 1)];
      std::vector<Eigen::VectorXd> y(x.size());
      for (size_t l = 0; l < x.size(); ++l) y[l] = (1.0 - th) * x[l] + th * z[l];
      values.push_back(oracle(y, &g));
      int l = order[static_cast<size_t>(i - 1)];
      double gamma = method.schedule.gamma.at(static_cast<size_t>(l));
      z[static_cast<size_t>(l)] -= (gamma / (p * th)) * g[static_cast<size_t>(l)];
      x = y;
      x[static_cast<size_t>(l)] -= gamma * g[static_cast<size_t>(l)];
    }
    values.push_back(oracle(x, nullptr));
    return values;
  }

  std::vector<Eigen::VectorXd> x = x0;
  for (int i = 0; i <= N; ++i) {
    values.push_back(oracle(x, &g));
    if (i == N) break;
    int l = order[static_cast<size_t>(i)];
    double gamma = method.step_gamma.empty() ? method.schedule.gamma.at(static_cast<size_t>(l))
                                             : method.step_gamma[static_cast<size_t>(i)];
    x[static_cast<size_t>(l)] -= gamma * g[static_cast<size_t>(l)];
  }
  return values;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n != y.size() || n < 3) throw std::invalid_argument("linear_fit_r2: need >= 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean = sy / n;
  for (size_t i = 0; i < n; ++i) {
    double fit = slope * x[i] + intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

}  // namespace pepbcd
