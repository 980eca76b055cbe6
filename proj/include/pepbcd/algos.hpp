#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pepbcd/core.hpp"

// Symbolic execution of the block coordinate descent methods: each run
// produces the Trajectory (iterate expressions over the Gram basis plus the
// interpolated triplet set) that the PEP assembly consumes.

namespace pepbcd {

enum class MethodKind { Ccd, Cacd, Am, Custom };

std::string to_string(MethodKind kind);
std::optional<MethodKind> parse_method(const std::string& name);

/// Per-block step sizes, optionally stated as a common relative factor
/// gamma so that gamma_l = gamma / L_l.
struct StepSchedule {
  std::vector<double> gamma;

  static StepSchedule absolute(std::vector<double> g);
  static StepSchedule relative(double factor, const LipschitzVector& L);
  static StepSchedule inverse_lipschitz(const LipschitzVector& L) { return relative(1.0, L); }
};

struct MethodSpec {
  MethodKind kind = MethodKind::Ccd;
  int blocks = 1;
  int cycles = 0;  // N = blocks*cycles when order is cyclic
  int steps = 0;   // explicit step count; inferred from cycles/order if 0
  StepSchedule schedule;
  std::vector<int> order;         // 0-based block per step; empty = cyclic
  std::vector<double> step_gamma;  // per-step sizes (Custom); overrides schedule
  bool include_star = true;

  int resolved_steps() const;
  /// t(i) for i = 0..N-1; cyclic default t(i) = i mod p.
  std::vector<int> resolved_order() const;
  bool cycle_aligned() const;  // N = p*K with the cyclic order
};

struct StructuralConstraint {
  ScalarExpr expr;
  bool equality;
  std::string name;
};

struct Trajectory {
  BasisPtr basis;
  MethodKind kind = MethodKind::Ccd;
  int blocks = 1;
  int steps = 0;
  int cycles = 0;  // 0 when not cycle aligned

  std::vector<Triplet> triplets;  // interpolation set; star last when present
  std::vector<StructuralConstraint> structural;
  std::vector<BlockVectorExpr> cycle_points;  // x_{p k}, k = 0..cycles
  std::vector<BlockVectorExpr> iterates;      // x_0..x_N
  int num_fvals = 0;
  int first_fval = 0;  // value symbol at x_0 (or the first evaluation point)
  int final_fval = 0;  // value symbol the performance criterion reads
};

/// theta_0 = 1/p, then theta_{i} = (sqrt(theta^4+4 theta^2)-theta^2)/2 of the
/// previous value; returns theta_0..theta_N (positive, strictly decreasing).
std::vector<double> theta_schedule(int p, int steps);

Trajectory run_ccd(const MethodSpec& spec);
Trajectory run_cacd(const MethodSpec& spec);
Trajectory run_am(const MethodSpec& spec);
Trajectory run_method(const MethodSpec& spec);

/// Prefix tree of block choices for the random accelerated method: nodes
/// share the triplets of common prefixes, leaves carry the sequence
/// probability. Zero-probability branches are not expanded.
struct SequenceTree {
  struct Node {
    std::vector<int> prefix;
    int parent = -1;
    int depth = 0;
    int triplet = -1;     // index into triplets
    double reach_prob = 1.0;
    std::vector<int> children;
  };

  int blocks = 1;
  int steps = 0;
  BasisPtr basis;
  std::vector<Node> nodes;      // nodes[0] is the root
  std::vector<Triplet> triplets;  // one per node, shared along prefixes
  std::vector<int> leaves;      // node indices at depth == steps
  BlockVectorExpr initial_point;
  int num_fvals = 0;
};

enum class Sampling {
  IidUniform,      // each step uniform over the p blocks
  ShuffledCycles,  // a fresh uniformly random block permutation every cycle
};

/// Per-step probability distributions (step_probs[i] is the distribution of
/// the block chosen at step i; must sum to 1). The default RACD sampling is
/// uniform 1/p at every step.
SequenceTree build_sequence_tree(int p, int steps,
                                 const std::vector<std::vector<double>>& step_probs,
                                 const LipschitzVector& L);
SequenceTree build_sequence_tree(int p, int steps, Sampling sampling, const LipschitzVector& L);

}  // namespace pepbcd
