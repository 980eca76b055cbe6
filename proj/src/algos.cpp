#include "pepbcd/algos.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace pepbcd {

std::string to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::Ccd:
      return "ccd";
    case MethodKind::Cacd:
      return "cacd";
    case MethodKind::Am:
      return "am";
    case MethodKind::Custom:
      return "custom";
  }
  return "?";
}

std::optional<MethodKind> parse_method(const std::string& name) {
  if (name == "ccd") return MethodKind::Ccd;
  if (name == "cacd") return MethodKind::Cacd;
  if (name == "am") return MethodKind::Am;
  if (name == "custom") return MethodKind::Custom;
  return std::nullopt;
}

StepSchedule StepSchedule::absolute(std::vector<double> g) {
  for (double v : g)
    if (!(v > 0.0)) throw std::invalid_argument("StepSchedule: step sizes must be positive");
  return StepSchedule{std::move(g)};
}

StepSchedule StepSchedule::relative(double factor, const LipschitzVector& L) {
  if (!(factor > 0.0)) throw std::invalid_argument("StepSchedule: relative factor must be positive");
  std::vector<double> g(static_cast<size_t>(L.size()));
  for (int l = 0; l < L.size(); ++l) g[static_cast<size_t>(l)] = factor / L[l];
  return StepSchedule{std::move(g)};
}

int MethodSpec::resolved_steps() const {
  if (!order.empty()) return static_cast<int>(order.size());
  if (steps > 0) return steps;
  if (cycles > 0) return blocks * cycles;
  throw std::invalid_argument("MethodSpec: no step count (set cycles, steps or order)");
}

std::vector<int> MethodSpec::resolved_order() const {
  int n = resolved_steps();
  if (!order.empty()) {
    for (int b : order)
      if (b < 0 || b >= blocks) throw std::invalid_argument("MethodSpec: order entry out of range");
    return order;
  }
  std::vector<int> t(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<size_t>(i)] = i % blocks;
  return t;
}

bool MethodSpec::cycle_aligned() const {
  int n = resolved_steps();
  if (n % blocks != 0) return false;
  auto t = resolved_order();
  for (int i = 0; i < n; ++i)
    if (t[static_cast<size_t>(i)] != i % blocks) return false;
  return true;
}

namespace {

void validate_schedule(const MethodSpec& spec) {
  if (spec.kind == MethodKind::Am) return;
  if (!spec.step_gamma.empty()) {
    if (static_cast<int>(spec.step_gamma.size()) != spec.resolved_steps())
      throw std::invalid_argument("MethodSpec: per-step size list length != step count");
    return;
  }
  if (static_cast<int>(spec.schedule.gamma.size()) != spec.blocks)
    throw std::invalid_argument("MethodSpec: schedule length != number of blocks");
}

double step_size(const MethodSpec& spec, int step, int block) {
  if (!spec.step_gamma.empty()) return spec.step_gamma[static_cast<size_t>(step)];
  return spec.schedule.gamma[static_cast<size_t>(block)];
}

void finish_cycle_data(Trajectory& traj, const std::vector<int>& order) {
  traj.cycles = 0;
  if (traj.steps % traj.blocks != 0) return;
  for (int i = 0; i < traj.steps; ++i)
    if (order[static_cast<size_t>(i)] != i % traj.blocks) return;
  traj.cycles = traj.steps / traj.blocks;
  for (int k = 0; k <= traj.cycles; ++k)
    traj.cycle_points.push_back(traj.iterates[static_cast<size_t>(k * traj.blocks)]);
}

void append_star(Trajectory& traj) {
  BlockVectorExpr zero(traj.basis);
  traj.triplets.push_back({zero, zero, Triplet::kStarValue, "*"});
}

}  // namespace

std::vector<double> theta_schedule(int p, int steps) {
  if (p < 1 || steps < 0) throw std::invalid_argument("theta_schedule: p >= 1, steps >= 0");
  std::vector<double> th;
  th.reserve(static_cast<size_t>(steps) + 1);
  th.push_back(1.0 / p);
  for (int i = 0; i < steps; ++i) {
    double t = th.back();
    th.push_back(0.5 * (std::sqrt(t * t * t * t + 4.0 * t * t) - t * t));
  }
  return th;
}

Trajectory run_ccd(const MethodSpec& spec) {
  validate_schedule(spec);
  const int p = spec.blocks;
  const int N = spec.resolved_steps();
  const auto order = spec.resolved_order();

  Trajectory traj;
  traj.basis = Basis::fixed_step(p, N + 1);
  traj.kind = spec.kind;
  traj.blocks = p;
  traj.steps = N;

  BlockVectorExpr x = BlockVectorExpr::unit(traj.basis, {BasisKind::InitialPoint, 0});
  traj.iterates.push_back(x);
  for (int i = 0; i <= N; ++i) {
    BlockVectorExpr g = BlockVectorExpr::unit(traj.basis, {BasisKind::Gradient, i});
    traj.triplets.push_back({x, g, i, "x" + std::to_string(i)});
    if (i < N) {
      int l = order[static_cast<size_t>(i)];
      BlockVectorExpr partial =
          BlockVectorExpr::unit_block(traj.basis, {BasisKind::Gradient, i}, l);
      partial *= step_size(spec, i, l);
      x -= partial;
      traj.iterates.push_back(x);
    }
  }
  traj.num_fvals = N + 1;
  traj.first_fval = 0;
  traj.final_fval = N;
  finish_cycle_data(traj, order);
  if (spec.include_star) append_star(traj);
  return traj;
}

Trajectory run_cacd(const MethodSpec& spec) {
  validate_schedule(spec);
  const int p = spec.blocks;
  const int N = spec.resolved_steps();
  const auto order = spec.resolved_order();
  const auto theta = theta_schedule(p, N);

  Trajectory traj;
  traj.basis = Basis::fixed_step(p, N + 1);
  traj.kind = MethodKind::Cacd;
  traj.blocks = p;
  traj.steps = N;

  // x and z are eliminated symbolically; gradients live at the y points,
  // which are the only evaluation points (y_0 = x_0 since z_0 = x_0).
  BlockVectorExpr x = BlockVectorExpr::unit(traj.basis, {BasisKind::InitialPoint, 0});
  BlockVectorExpr z = x;
  traj.iterates.push_back(x);
  for (int i = 1; i <= N; ++i) {
    double th = theta[static_cast<size_t>(i - 1)];
    BlockVectorExpr y = (1.0 - th) * x + th * z;
    BlockVectorExpr g = BlockVectorExpr::unit(traj.basis, {BasisKind::Gradient, i - 1});
    traj.triplets.push_back({y, g, i - 1, "y" + std::to_string(i - 1)});
    int l = order[static_cast<size_t>(i - 1)];
    BlockVectorExpr partial =
        BlockVectorExpr::unit_block(traj.basis, {BasisKind::Gradient, i - 1}, l);
    double gamma = step_size(spec, i - 1, l);
    z -= (gamma / (p * th)) * partial;
    x = y - gamma * partial;
    traj.iterates.push_back(x);
  }
  BlockVectorExpr gN = BlockVectorExpr::unit(traj.basis, {BasisKind::Gradient, N});
  traj.triplets.push_back({x, gN, N, "x" + std::to_string(N)});
  traj.num_fvals = N + 1;
  traj.first_fval = 0;
  traj.final_fval = N;
  finish_cycle_data(traj, order);
  if (spec.include_star) append_star(traj);
  return traj;
}

Trajectory run_am(const MethodSpec& spec) {
  const int p = spec.blocks;
  const int N = spec.resolved_steps();
  const auto order = spec.resolved_order();

  Trajectory traj;
  traj.basis = Basis::extended(p, N);
  traj.kind = MethodKind::Am;
  traj.blocks = p;
  traj.steps = N;

  // Exact minimization over block l at step i is encoded by substitution:
  // the off-blocks of x_i reuse x_{i-1}'s expressions (immobility) and the
  // gradient of x_i has no component on l (stationarity). This is the
  // vector form of the Gram-equality modeling and keeps the SDP strictly
  // feasible, which the constraint form would destroy.
  std::vector<BlockVectorExpr> xs;
  xs.push_back(BlockVectorExpr::unit(traj.basis, {BasisKind::InitialPoint, 0}));
  for (int i = 1; i <= N; ++i) {
    int l = order[static_cast<size_t>(i - 1)];
    BlockVectorExpr x(traj.basis);
    for (int s = 0; s < p; ++s) {
      if (s == l) {
        x.add_term(s, {BasisKind::Iterate, i}, 1.0);
      } else {
        for (const auto& [col, coeff] : xs.back().coeffs(s))
          x.add_term(s, traj.basis->label(col), coeff);
      }
    }
    xs.push_back(std::move(x));
  }
  traj.iterates = xs;

  for (int i = 0; i <= N; ++i) {
    BlockVectorExpr g(traj.basis);
    int stationary = i >= 1 ? order[static_cast<size_t>(i - 1)] : -1;
    for (int s = 0; s < p; ++s) {
      if (s == stationary) continue;
      g += BlockVectorExpr::unit_block(traj.basis, {BasisKind::Gradient, i}, s);
    }
    traj.triplets.push_back({xs[static_cast<size_t>(i)], g, i, "x" + std::to_string(i)});
  }
  traj.num_fvals = N + 1;
  traj.first_fval = 0;
  traj.final_fval = N;
  finish_cycle_data(traj, order);
  if (spec.include_star) append_star(traj);
  return traj;
}

Trajectory run_method(const MethodSpec& spec) {
  switch (spec.kind) {
    case MethodKind::Ccd:
    case MethodKind::Custom:
      return run_ccd(spec);
    case MethodKind::Cacd:
      return run_cacd(spec);
    case MethodKind::Am:
      return run_am(spec);
  }
  throw std::invalid_argument("run_method: unknown method kind");
}

namespace {

using Policy = std::function<std::vector<double>(const std::vector<int>&)>;

SequenceTree build_tree_impl(int p, int steps, const Policy& policy, const LipschitzVector& L) {
  if (p < 1 || steps < 1) throw std::invalid_argument("build_sequence_tree: p >= 1, steps >= 1");
  if (L.size() != p) throw std::invalid_argument("build_sequence_tree: L length != p");
  const auto theta = theta_schedule(p, steps);

  // First pass: enumerate reachable prefixes breadth-first so gradient
  // columns get a deterministic order (depth, then lexicographic prefix).
  std::vector<std::vector<int>> prefixes{{}};
  std::vector<double> reach{1.0};
  std::vector<int> parent{-1};
  for (size_t head = 0; head < prefixes.size(); ++head) {
    if (static_cast<int>(prefixes[head].size()) == steps) continue;
    auto probs = policy(prefixes[head]);
    if (static_cast<int>(probs.size()) != p)
      throw std::invalid_argument("build_sequence_tree: policy distribution length != p");
    double sum = 0.0;
    for (double q : probs) {
      if (q < 0.0) throw std::invalid_argument("build_sequence_tree: negative probability");
      sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("build_sequence_tree: step distribution does not sum to 1");
    for (int l = 0; l < p; ++l) {
      if (probs[static_cast<size_t>(l)] == 0.0) continue;
      auto pre = prefixes[head];
      pre.push_back(l);
      prefixes.push_back(std::move(pre));
      reach.push_back(reach[head] * probs[static_cast<size_t>(l)]);
      parent.push_back(static_cast<int>(head));
    }
  }
  // breadth-first enumeration above is already (depth, lex) ordered since
  // children are appended in block order from an ordered queue

  const int count = static_cast<int>(prefixes.size());
  std::vector<std::vector<int>> children(static_cast<size_t>(count));
  for (int id = 1; id < count; ++id)
    children[static_cast<size_t>(parent[static_cast<size_t>(id)])].push_back(id);

  SequenceTree tree;
  tree.blocks = p;
  tree.steps = steps;
  tree.basis = Basis::fixed_step(p, count);  // one gradient column per node + x_0
  tree.initial_point = BlockVectorExpr::unit(tree.basis, {BasisKind::InitialPoint, 0});

  std::vector<BlockVectorExpr> state_x(static_cast<size_t>(count), BlockVectorExpr(tree.basis));
  std::vector<BlockVectorExpr> state_z = state_x;
  state_x[0] = tree.initial_point;
  state_z[0] = tree.initial_point;

  auto prefix_name = [](const char* head, const std::vector<int>& prefix) {
    std::string nm(head);
    nm += "[";
    for (int b : prefix) nm += std::to_string(b + 1);
    return nm + "]";
  };

  // Breadth-first order guarantees a node's state is in place before it is
  // visited; children states are filled from the parent's y point.
  tree.nodes.resize(static_cast<size_t>(count));
  for (int id = 0; id < count; ++id) {
    auto& node = tree.nodes[static_cast<size_t>(id)];
    node.prefix = prefixes[static_cast<size_t>(id)];
    node.parent = parent[static_cast<size_t>(id)];
    node.depth = static_cast<int>(node.prefix.size());
    node.reach_prob = reach[static_cast<size_t>(id)];
    node.children = children[static_cast<size_t>(id)];
    node.triplet = id;

    BlockVectorExpr g = BlockVectorExpr::unit(tree.basis, {BasisKind::Gradient, id});
    if (node.depth < steps) {
      double th = theta[static_cast<size_t>(node.depth)];
      BlockVectorExpr y =
          (1.0 - th) * state_x[static_cast<size_t>(id)] + th * state_z[static_cast<size_t>(id)];
      tree.triplets.push_back({y, g, id, prefix_name("y", node.prefix)});
      for (int child : node.children) {
        int l = prefixes[static_cast<size_t>(child)].back();
        BlockVectorExpr partial =
            BlockVectorExpr::unit_block(tree.basis, {BasisKind::Gradient, id}, l);
        double gamma = 1.0 / L[l];
        state_z[static_cast<size_t>(child)] = state_z[static_cast<size_t>(id)];
        state_z[static_cast<size_t>(child)] -= (gamma / (p * th)) * partial;
        state_x[static_cast<size_t>(child)] = y - gamma * partial;
      }
    } else {
      tree.triplets.push_back({state_x[static_cast<size_t>(id)], g, id,
                               prefix_name("xN", node.prefix)});
      tree.leaves.push_back(id);
    }
  }
  tree.num_fvals = count;
  return tree;
}

}  // namespace

SequenceTree build_sequence_tree(int p, int steps,
                                 const std::vector<std::vector<double>>& step_probs,
                                 const LipschitzVector& L) {
  if (static_cast<int>(step_probs.size()) != steps)
    throw std::invalid_argument("build_sequence_tree: need one distribution per step");
  Policy policy = [&step_probs](const std::vector<int>& prefix) {
    return step_probs.at(prefix.size());
  };
  return build_tree_impl(p, steps, policy, L);
}

SequenceTree build_sequence_tree(int p, int steps, Sampling sampling, const LipschitzVector& L) {
  if (sampling == Sampling::IidUniform) {
    Policy policy = [p](const std::vector<int>&) {
      return std::vector<double>(static_cast<size_t>(p), 1.0 / p);
    };
    return build_tree_impl(p, steps, policy, L);
  }
  // ShuffledCycles: within each cycle of p steps, the next block is uniform
  // over the blocks not yet used in that cycle.
  Policy policy = [p](const std::vector<int>& prefix) {
    int pos = static_cast<int>(prefix.size()) % p;
    std::vector<bool> used(static_cast<size_t>(p), false);
    for (size_t i = prefix.size() - static_cast<size_t>(pos); i < prefix.size(); ++i)
      used[static_cast<size_t>(prefix[i])] = true;
    std::vector<double> probs(static_cast<size_t>(p), 0.0);
    int remaining = p - pos;
    for (int l = 0; l < p; ++l)
      if (!used[static_cast<size_t>(l)]) probs[static_cast<size_t>(l)] = 1.0 / remaining;
    return probs;
  };
  return build_tree_impl(p, steps, policy, L);
}

}  // namespace pepbcd
