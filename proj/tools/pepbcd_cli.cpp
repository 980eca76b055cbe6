// Batch experiment runner for the worst-case toolkit: configure a method,
// setting and sweep, solve the PEPs and emit machine-readable tables.

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pepbcd/analysis.hpp"

using nlohmann::ordered_json;
using namespace pepbcd;

namespace {

struct Config {
  std::string method = "ccd";
  int blocks = 2;
  int cycles = 0;
  int steps = 0;
  std::vector<double> lipschitz;
  std::vector<double> gamma;
  double gamma_rel = 0.0;
  std::vector<int> order;  // 1-based on the surface
  std::string setting = "init";
  double radius = 1.0;
  std::string criterion = "gap";
  double tol = default_solver_tolerance();
  std::string out;
  std::string format = "csv";
  std::string export_path;
  int jobs = 1;
  // sweep
  std::string axis;
  std::string range;
  int sequence_cap = 81;
  bool dedup = true;
  std::string sampling = "shuffle";
  nlohmann::json verify_config;
};

LipschitzVector config_lipschitz(const Config& cfg) {
  if (cfg.lipschitz.empty()) return LipschitzVector::uniform(cfg.blocks);
  if (static_cast<int>(cfg.lipschitz.size()) != cfg.blocks)
    throw CLI::ValidationError("--lipschitz length must equal --blocks");
  return LipschitzVector(cfg.lipschitz);
}

MethodSpec config_method(const Config& cfg) {
  MethodSpec spec;
  auto kind = parse_method(cfg.method);
  if (!kind) throw CLI::ValidationError("unknown method: " + cfg.method);
  spec.kind = *kind;
  spec.blocks = cfg.blocks;
  spec.cycles = cfg.cycles;
  spec.steps = cfg.steps;
  for (int b : cfg.order) {
    if (b < 1 || b > cfg.blocks) throw CLI::ValidationError("--order entries are 1-based blocks");
    spec.order.push_back(b - 1);
  }
  if (spec.kind != MethodKind::Am) {
    LipschitzVector L = config_lipschitz(cfg);
    if (!cfg.gamma.empty()) {
      if (static_cast<int>(cfg.gamma.size()) != cfg.blocks)
        throw CLI::ValidationError("--gamma length must equal --blocks");
      spec.schedule = StepSchedule::absolute(cfg.gamma);
    } else {
      spec.schedule = StepSchedule::relative(cfg.gamma_rel > 0 ? cfg.gamma_rel : 1.0, L);
    }
  }
  return spec;
}

Setting config_setting(const Config& cfg) {
  auto kind = parse_setting(cfg.setting);
  if (!kind) throw CLI::ValidationError("unknown setting: " + cfg.setting);
  return Setting{*kind, cfg.radius, false};
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v[i]);
    out += buf;
    if (i + 1 < v.size()) out += ",";
  }
  return out;
}

std::string join_order(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    out += std::to_string(v[i] + 1);
    if (i + 1 < v.size()) out += ",";
  }
  return out;
}

struct Row {
  std::string method;
  int p = 0;
  int K = 0;
  std::string lipschitz;
  std::string gamma;
  std::string setting;
  double radius = 0.0;
  double bound = 0.0;
  std::optional<double> beck;
  std::optional<double> lower;
  std::string status;
  double seconds = 0.0;
  double tol = 0.0;
  std::string label;  // sweep point / sequence
};

const char* kCsvHeader =
    "method,p,K,L,gamma,setting,R,bound,beck_bound,lower_bound,solver_status,solve_seconds,tol,"
    "label";

std::string csv_row(const Row& r) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  return r.method + "," + std::to_string(r.p) + "," + std::to_string(r.K) + ",\"" + r.lipschitz +
         "\",\"" + r.gamma + "\"," + r.setting + "," + num(r.radius) + "," + num(r.bound) + "," +
         (r.beck ? num(*r.beck) : "") + "," + (r.lower ? num(*r.lower) : "") + "," + r.status +
         "," + num(r.seconds) + "," + num(r.tol) + "," + r.label;
}

ordered_json json_row(const Row& r) {
  ordered_json j;
  j["method"] = r.method;
  j["p"] = r.p;
  j["K"] = r.K;
  j["L"] = r.lipschitz;
  j["gamma"] = r.gamma;
  j["setting"] = r.setting;
  j["R"] = r.radius;
  j["bound"] = r.bound;
  if (r.beck) j["beck_bound"] = *r.beck;
  if (r.lower) j["lower_bound"] = *r.lower;
  j["solver_status"] = r.status;
  j["solve_seconds"] = r.seconds;
  j["tol"] = r.tol;
  if (!r.label.empty()) j["label"] = r.label;
  return j;
}

void write_rows(const Config& cfg, const std::vector<Row>& rows) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!cfg.out.empty()) {
    file.open(cfg.out);
    if (!file) throw std::runtime_error("cannot open output file " + cfg.out);
    os = &file;
  }
  if (cfg.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) arr.push_back(json_row(r));
    *os << arr.dump(2) << "\n";
  } else {
    *os << kCsvHeader << "\n";
    for (const auto& r : rows) *os << csv_row(r) << "\n";
  }
}

Row solve_one(const Config& cfg, const MethodSpec& spec, const Setting& setting,
              const LipschitzVector& L, bool with_lower) {
  SolverOptions opts;
  opts.tol = cfg.tol;
  auto report = worst_case(spec, setting, L, opts, with_lower);
  Row row;
  row.method = to_string(spec.kind);
  row.p = spec.blocks;
  row.K = spec.cycle_aligned() ? spec.resolved_steps() / spec.blocks : 0;
  row.lipschitz = join_doubles(L.values());
  row.gamma = spec.kind == MethodKind::Am ? "" : join_doubles(spec.schedule.gamma);
  if (!spec.order.empty()) row.label = "order=" + join_order(spec.order);
  row.setting = to_string(setting.kind);
  row.radius = setting.radius;
  row.bound = report.value;
  row.beck = report.beck_bound ? report.beck_bound : report.am_comparator;
  row.lower = report.gd_lower_bound;
  row.status = to_string(report.status);
  row.seconds = report.seconds;
  row.tol = report.tolerance;
  return row;
}

std::vector<double> parse_range(const std::string& text) {
  // "a..b" or "a..b:step"
  auto dots = text.find("..");
  if (dots == std::string::npos) throw CLI::ValidationError("range must look like a..b[:step]");
  double lo = std::stod(text.substr(0, dots));
  std::string rest = text.substr(dots + 2);
  double hi, step = 1.0;
  auto colon = rest.find(':');
  if (colon == std::string::npos) {
    hi = std::stod(rest);
  } else {
    hi = std::stod(rest.substr(0, colon));
    step = std::stod(rest.substr(colon + 1));
  }
  if (step <= 0 || hi < lo) throw CLI::ValidationError("bad range " + text);
  std::vector<double> vals;
  for (double v = lo; v <= hi + 1e-12; v += step) vals.push_back(v);
  return vals;
}

int cmd_bound(const Config& cfg) {
  LipschitzVector L = config_lipschitz(cfg);
  MethodSpec spec = config_method(cfg);
  Criterion crit =
      cfg.criterion == "min-grad" ? Criterion::min_grad_dual_norm() : Criterion::final_gap();
  if (!cfg.export_path.empty()) {
    auto traj = run_method(spec);
    export_sdpa(assemble_pep(traj, config_setting(cfg), crit, L), cfg.export_path);
  }
  Row row;
  if (crit.kind == CriterionKind::MinGradDualNorm) {
    auto traj = run_method(spec);
    auto prob = assemble_pep(traj, config_setting(cfg), crit, L);
    SolverOptions opts;
    opts.tol = cfg.tol;
    auto t0 = std::chrono::steady_clock::now();
    auto res = solve(prob, opts);
    row.method = to_string(spec.kind);
    row.p = spec.blocks;
    row.K = spec.cycle_aligned() ? spec.resolved_steps() / spec.blocks : 0;
    row.lipschitz = join_doubles(L.values());
    row.gamma = spec.kind == MethodKind::Am ? "" : join_doubles(spec.schedule.gamma);
    row.setting = cfg.setting;
    row.radius = cfg.radius;
    row.bound = res.value;
    row.status = to_string(res.status);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.tol = res.tolerance;
    row.label = "criterion=min-grad";
  } else {
    row = solve_one(cfg, spec, config_setting(cfg), L, true);
  }
  write_rows(cfg, {row});
  return row.status == "optimal" ? 0 : 1;
}

int cmd_sweep(const Config& cfg) {
  std::vector<Config> points;
  std::vector<std::string> labels;
  if (cfg.axis == "cycles") {
    for (double v : parse_range(cfg.range)) {
      Config c = cfg;
      c.cycles = static_cast<int>(v);
      c.steps = 0;
      points.push_back(c);
      labels.push_back("K=" + std::to_string(static_cast<int>(v)));
    }
  } else if (cfg.axis == "blocks") {
    for (double v : parse_range(cfg.range)) {
      Config c = cfg;
      c.blocks = static_cast<int>(v);
      c.lipschitz.clear();  // uniform constants across the block sweep
      c.gamma.clear();
      points.push_back(c);
      labels.push_back("p=" + std::to_string(static_cast<int>(v)));
    }
  } else if (cfg.axis == "step-size") {
    for (double v : parse_range(cfg.range)) {
      Config c = cfg;
      c.gamma.clear();
      c.gamma_rel = v;
      points.push_back(c);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "gamma=%g", v);
      labels.push_back(buf);
    }
  } else {
    throw CLI::ValidationError("--axis must be cycles, blocks or step-size");
  }

  std::vector<Row> rows(points.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> any_failed{false};
  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= points.size()) break;
      try {
        rows[i] = solve_one(points[i], config_method(points[i]), config_setting(points[i]),
                            config_lipschitz(points[i]), false);
      } catch (const std::exception& e) {
        rows[i].status = std::string("error: ") + e.what();
        any_failed = true;
      }
      rows[i].label = labels[i];
      if (rows[i].status != "optimal") any_failed = true;
    }
  };
  int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  write_rows(cfg, rows);
  return any_failed ? 1 : 0;
}

int cmd_descent_lemma(const Config& cfg) {
  LipschitzVector L = config_lipschitz(cfg);
  SolverOptions opts;
  opts.tol = cfg.tol;
  double C = descent_lemma_constant(cfg.blocks, L, opts);
  int K = cfg.cycles > 0 ? cfg.cycles : 8;
  auto bounds = semi_analytic_bound(C, cfg.blocks, K, L, cfg.radius);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!cfg.out.empty()) {
    file.open(cfg.out);
    os = &file;
  }
  if (cfg.format == "json") {
    ordered_json j;
    j["p"] = cfg.blocks;
    j["L"] = L.values();
    j["C_opt"] = C;
    j["R"] = cfg.radius;
    j["tol"] = cfg.tol;
    ordered_json table = ordered_json::array();
    for (size_t k = 0; k < bounds.size(); ++k)
      table.push_back({{"k", k + 1}, {"bound", bounds[k]}});
    j["bounds"] = table;
    *os << j.dump(2) << "\n";
  } else {
    *os << "C_opt," << C << ",tol," << cfg.tol << "\n";
    *os << "k,bound\n";
    for (size_t k = 0; k < bounds.size(); ++k) *os << (k + 1) << "," << bounds[k] << "\n";
  }
  return 0;
}

std::vector<int> canonical_relabel(const std::vector<int>& seq, int p) {
  // first-occurrence relabeling: the sequence pattern modulo block renaming
  std::vector<int> map(static_cast<size_t>(p), -1);
  int next = 0;
  std::vector<int> out;
  for (int b : seq) {
    if (map[static_cast<size_t>(b)] < 0) map[static_cast<size_t>(b)] = next++;
    out.push_back(map[static_cast<size_t>(b)]);
  }
  return out;
}

int cmd_racd_compare(const Config& cfg) {
  const int p = cfg.blocks;
  const int N = cfg.steps > 0 ? cfg.steps : p * std::max(1, cfg.cycles);
  double total = std::pow(p, N);
  if (total > cfg.sequence_cap)
    throw CLI::ValidationError("p^N = " + std::to_string(static_cast<long>(total)) +
                               " exceeds the cap (" + std::to_string(cfg.sequence_cap) +
                               "); raise --sequence-cap to proceed");
  LipschitzVector L = config_lipschitz(cfg);
  SolverOptions opts;
  opts.tol = cfg.tol;

  // enumerate sequences, deduplicated by block relabeling when requested
  std::vector<std::vector<int>> seqs;
  std::set<std::vector<int>> seen;
  std::vector<int> seq(static_cast<size_t>(N), 0);
  while (true) {
    std::vector<int> key = cfg.dedup ? canonical_relabel(seq, p) : seq;
    if (seen.insert(key).second) seqs.push_back(key);
    int i = N - 1;
    while (i >= 0 && seq[static_cast<size_t>(i)] == p - 1) seq[static_cast<size_t>(i--)] = 0;
    if (i < 0) break;
    ++seq[static_cast<size_t>(i)];
  }

  std::vector<Row> rows;
  for (const auto& s : seqs) {
    MethodSpec spec;
    spec.kind = MethodKind::Cacd;
    spec.blocks = p;
    spec.order = s;
    spec.schedule = StepSchedule::inverse_lipschitz(L);
    auto report = worst_case(spec, config_setting(cfg), L, opts);
    Row row;
    row.method = "cacd";
    row.p = p;
    row.K = N / p;
    row.lipschitz = join_doubles(L.values());
    row.gamma = join_doubles(spec.schedule.gamma);
    row.setting = cfg.setting;
    row.radius = cfg.radius;
    row.bound = report.value;
    row.status = to_string(report.status);
    row.seconds = report.seconds;
    row.tol = report.tolerance;
    row.label = "order=" + join_order(s);
    rows.push_back(row);
  }
  {
    Sampling sampling = cfg.sampling == "iid" ? Sampling::IidUniform : Sampling::ShuffledCycles;
    auto tree = build_sequence_tree(p, N, sampling, L);
    auto prob = assemble_random_pep(tree, config_setting(cfg), Criterion::final_gap(), L);
    auto t0 = std::chrono::steady_clock::now();
    auto res = solve(prob, opts);
    Row row;
    row.method = "racd";
    row.p = p;
    row.K = N / p;
    row.lipschitz = join_doubles(L.values());
    row.gamma = join_doubles(StepSchedule::inverse_lipschitz(L).gamma);
    row.setting = cfg.setting;
    row.radius = cfg.radius;
    row.bound = res.value;
    row.status = to_string(res.status);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.tol = res.tolerance;
    row.label = std::string("expectation(") + cfg.sampling + ")";
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.bound < b.bound; });
  write_rows(cfg, rows);
  for (const auto& r : rows)
    if (r.status != "optimal") return 1;
  return 0;
}

int cmd_export(const Config& cfg) {
  if (cfg.export_path.empty()) throw CLI::ValidationError("--export-sdpa PATH is required");
  LipschitzVector L = config_lipschitz(cfg);
  SdpProblem prob;
  if (cfg.method == "racd") {
    Sampling sampling = cfg.sampling == "iid" ? Sampling::IidUniform : Sampling::ShuffledCycles;
    int N = cfg.steps > 0 ? cfg.steps : cfg.blocks * std::max(1, cfg.cycles);
    auto tree = build_sequence_tree(cfg.blocks, N, sampling, L);
    prob = assemble_random_pep(tree, config_setting(cfg), Criterion::final_gap(), L);
  } else {
    auto traj = run_method(config_method(cfg));
    Criterion crit =
        cfg.criterion == "min-grad" ? Criterion::min_grad_dual_norm() : Criterion::final_gap();
    prob = assemble_pep(traj, config_setting(cfg), crit, L);
  }
  export_sdpa(prob, cfg.export_path);
  std::cout << "wrote " << cfg.export_path << "\n";
  std::cout << "constraints: " << prob.constraints.size() << "\n";
  std::cout << "gram blocks: " << prob.blocks << " x " << prob.gram_dim << "x" << prob.gram_dim
            << "\n";
  std::cout << "value symbols: " << prob.num_fvals << "\n";
  return 0;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

int cmd_verify(const Config& cfg) {
  SolverOptions opts;
  opts.tol = cfg.tol;
  const nlohmann::json& vc = cfg.verify_config;
  std::vector<CheckResult> results;
  auto note = [](double a, double b) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.8f vs %.8f", a, b);
    return std::string(buf);
  };

  {
    nlohmann::json cases = nlohmann::json::array();
    if (vc.contains("scale_invariance")) {
      cases = vc["scale_invariance"];
    } else {
      cases.push_back({{"L", {1.0, 4.0}}, {"K", 1}});
      cases.push_back({{"L", {1.0, 3.0, 5.0}}, {"K", 1}});
    }
    for (const auto& c : cases) {
      std::vector<double> L = c.at("L").get<std::vector<double>>();
      int K = c.value("K", 1);
      bool relative = c.value("relative", true);
      int p = static_cast<int>(L.size());
      std::vector<double> gamma = c.value("gamma", std::vector<double>(L.size(), 1.0));
      CheckResult r;
      r.name = "scale-invariance[L=" + join_doubles(L) + "]";
      try {
        if (relative) {
          auto rep = verify_scale_invariance(p, K, gamma, LipschitzVector(L), opts);
          r.pass = rep.pass;
          r.detail = note(rep.value_weighted, rep.value_unit);
        } else {
          // absolute steps do not satisfy the homogeneity property
          MethodSpec a;
          a.kind = MethodKind::Ccd;
          a.blocks = p;
          a.cycles = K;
          a.schedule = StepSchedule::absolute(gamma);
          auto va = worst_case(a, Setting::init(1.0), LipschitzVector(L), opts);
          auto vb = worst_case(a, Setting::init(1.0), LipschitzVector::uniform(p), opts);
          double denom = std::max(std::abs(va.value), std::abs(vb.value));
          r.pass = std::abs(va.value - vb.value) <= 1e-6 * denom;
          r.detail = note(va.value, vb.value);
        }
      } catch (const std::exception& e) {
        r.detail = e.what();
      }
      results.push_back(r);
    }
  }
  {
    std::vector<int> ps = vc.contains("sandwich") ? vc["sandwich"]["p"].get<std::vector<int>>()
                                                  : std::vector<int>{2, 3};
    std::vector<int> Ks = vc.contains("sandwich") ? vc["sandwich"]["K"].get<std::vector<int>>()
                                                  : std::vector<int>{1, 2};
    for (int p : ps) {
      for (int K : Ks) {
        CheckResult r;
        r.name = "sandwich[p=" + std::to_string(p) + ",K=" + std::to_string(K) + "]";
        try {
          LipschitzVector L = LipschitzVector::uniform(p);
          MethodSpec spec;
          spec.kind = MethodKind::Ccd;
          spec.blocks = p;
          spec.cycles = K;
          spec.schedule = StepSchedule::inverse_lipschitz(L);
          auto init = worst_case(spec, Setting::init(1.0), L, opts);
          auto all = worst_case(spec, Setting::all(1.0), L, opts);
          double lower = p / (4.0 * p * K + 2.0);
          double beck = beck_ccd_bound(p, K, L, 1.0);
          r.pass = init.value >= lower - 1e-6 && all.value <= beck + 1e-6;
          char buf[120];
          std::snprintf(buf, sizeof(buf), "%.6f >= %.6f, %.6f <= %.6f", init.value, lower,
                        all.value, beck);
          r.detail = buf;
        } catch (const std::exception& e) {
          r.detail = e.what();
        }
        results.push_back(r);
      }
    }
  }
  {
    std::vector<double> Ls = vc.contains("descent")
                                 ? vc["descent"]["L"].get<std::vector<double>>()
                                 : std::vector<double>{1.0, 2.0};
    CheckResult r;
    r.name = "two-block-descent";
    try {
      auto rep = verify_two_block_descent(LipschitzVector(Ls), opts);
      r.pass = rep.pass;
      r.detail = note(rep.values[0], rep.lemma_bounds[0]);
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(r);
  }
  {
    std::vector<int> Ks = vc.contains("residual") ? vc["residual"]["K"].get<std::vector<int>>()
                                                  : std::vector<int>{1, 2};
    for (int K : Ks) {
      CheckResult r;
      r.name = "residual-bound[K=" + std::to_string(K) + "]";
      try {
        auto rep = verify_residual_bound(K, LipschitzVector({1.0, 1.0}), opts);
        r.pass = rep.pass;
        r.detail = note(rep.value, rep.theorem_bound);
      } catch (const std::exception& e) {
        r.detail = e.what();
      }
      results.push_back(r);
    }
  }
  {
    // the three-point fixture satisfies every pairwise condition yet is not
    // interpolable: a pass is evidence of necessity only
    CheckResult r;
    r.name = "counterexample-necessary-only";
    try {
      auto set = counterexample_triplets();
      auto rep = check_finite_set(set.points, set.L, 1e-9);
      r.pass = rep.pass;
      r.detail = "pairwise pass; necessary-only";
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(r);
  }

  ordered_json summary;
  summary["tol"] = cfg.tol;
  ordered_json checks = ordered_json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  (" << r.detail << ")\n";
  }
  summary["checks"] = checks;
  summary["pass"] = all_pass;
  if (!cfg.out.empty()) {
    std::ofstream file(cfg.out);
    file << summary.dump(2) << "\n";
  }
  return all_pass ? 0 : 1;
}

void apply_config_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("cannot open config file " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.contains("method")) cfg.method = doc["method"];
  if (doc.contains("blocks")) cfg.blocks = doc["blocks"];
  if (doc.contains("cycles")) cfg.cycles = doc["cycles"];
  if (doc.contains("steps")) cfg.steps = doc["steps"];
  if (doc.contains("lipschitz")) cfg.lipschitz = doc["lipschitz"].get<std::vector<double>>();
  if (doc.contains("gamma")) cfg.gamma = doc["gamma"].get<std::vector<double>>();
  if (doc.contains("gamma_rel")) cfg.gamma_rel = doc["gamma_rel"];
  if (doc.contains("order")) cfg.order = doc["order"].get<std::vector<int>>();
  if (doc.contains("setting")) cfg.setting = doc["setting"];
  if (doc.contains("radius")) cfg.radius = doc["radius"];
  if (doc.contains("criterion")) cfg.criterion = doc["criterion"];
  if (doc.contains("tol")) cfg.tol = doc["tol"];
  if (doc.contains("out")) cfg.out = doc["out"];
  if (doc.contains("format")) cfg.format = doc["format"];
  if (doc.contains("jobs")) cfg.jobs = doc["jobs"];
  if (doc.contains("sampling")) cfg.sampling = doc["sampling"];
  if (doc.contains("verify")) cfg.verify_config = doc["verify"];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"worst-case convergence bounds for block coordinate descent"};
  app.require_subcommand(1);

  Config cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config document (flags override it)");
    cmd->add_option("--method", cfg.method, "ccd|cacd|am|custom|racd");
    cmd->add_option("--blocks", cfg.blocks, "number of coordinate blocks");
    cmd->add_option("--cycles", cfg.cycles, "number of cycles K");
    cmd->add_option("--steps", cfg.steps, "number of steps N");
    cmd->add_option("--lipschitz", cfg.lipschitz, "per-block constants a,b,...")->delimiter(',');
    cmd->add_option("--gamma", cfg.gamma, "absolute step sizes a,b,...")->delimiter(',');
    cmd->add_option("--gamma-rel", cfg.gamma_rel, "relative step factor (gamma_l = g/L_l)");
    cmd->add_option("--order", cfg.order, "explicit block sequence (1-based)")->delimiter(',');
    cmd->add_option("--setting", cfg.setting, "all|init|gradnorm");
    cmd->add_option("--radius", cfg.radius, "setting radius");
    cmd->add_option("--criterion", cfg.criterion, "gap|min-grad");
    cmd->add_option("--tol", cfg.tol, "solver tolerance (default from PEPBCD_SOLVER_TOL)");
    cmd->add_option("--out", cfg.out, "output path (stdout when empty)");
    cmd->add_option("--format", cfg.format, "csv|json");
    cmd->add_option("--jobs", cfg.jobs, "parallel solves for sweeps");
  };

  auto* bound = app.add_subcommand("bound", "solve one worst-case PEP");
  add_common(bound);
  bound->add_option("--export-sdpa", cfg.export_path, "also write the problem as .dat-s");

  auto* sweep = app.add_subcommand("sweep", "solve a family of PEPs along one axis");
  add_common(sweep);
  sweep->add_option("--axis", cfg.axis, "cycles|blocks|step-size")->required();
  sweep->add_option("--range", cfg.range, "a..b[:step]")->required();

  auto* descent = app.add_subcommand("descent-lemma", "optimized descent constant and bounds");
  add_common(descent);

  auto* racd = app.add_subcommand("racd-compare", "all fixed sequences vs the random expectation");
  add_common(racd);
  racd->add_option("--sequence-cap", cfg.sequence_cap, "maximum p^N sequences");
  racd->add_flag("!--no-dedup", cfg.dedup, "keep relabel-symmetric duplicates");
  racd->add_option("--sampling", cfg.sampling, "shuffle|iid random model");

  auto* verify = app.add_subcommand("verify", "run the structural-theorem checks");
  add_common(verify);

  auto* exp = app.add_subcommand("export", "write the PEP in sparse SDPA format");
  add_common(exp);
  exp->add_option("--export-sdpa", cfg.export_path, "output .dat-s path");
  exp->add_option("--sampling", cfg.sampling, "shuffle|iid (racd export)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      // flags override the file: reparse on top of the file-loaded defaults
      apply_config_file(cfg, config_path);
      app.clear();
      (void)app.parse(argc, argv);
    }
    if (bound->parsed()) return cmd_bound(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (descent->parsed()) return cmd_descent_lemma(cfg);
    if (racd->parsed()) return cmd_racd_compare(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (exp->parsed()) return cmd_export(cfg);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
