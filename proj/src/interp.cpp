#include "pepbcd/interp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pepbcd {

std::vector<InterpConstraint> generate_interp_constraints(const std::vector<Triplet>& triplets,
                                                          const LipschitzVector& L) {
  const int n = static_cast<int>(triplets.size());
  if (n == 0) return {};
  const BasisPtr& basis = triplets.front().point.basis();
  const int p = basis->blocks();
  if (L.size() != p)
    throw std::invalid_argument("generate_interp_constraints: L length != number of blocks");
  for (const auto& t : triplets) {
    if (t.point.basis().get() != basis.get() || t.gradient.basis().get() != basis.get())
      throw std::invalid_argument("generate_interp_constraints: triplets over different bases");
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!triplets[i].name.empty() && triplets[i].name == triplets[j].name)
        throw std::invalid_argument("generate_interp_constraints: duplicate triplet index " +
                                    triplets[i].name);

  auto fval_expr = [&](const Triplet& t) {
    return t.is_star() ? ScalarExpr::constant(basis, 0.0) : ScalarExpr::fval(basis, t.fval);
  };

  std::vector<InterpConstraint> out;
  out.reserve(static_cast<size_t>(p) * n * (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // the i=j instance is identically 0 >= 0
      const Triplet& ti = triplets[static_cast<size_t>(i)];
      const Triplet& tj = triplets[static_cast<size_t>(j)];
      ScalarExpr base = fval_expr(ti) - fval_expr(tj);
      base -= inner_product(tj.gradient, ti.point - tj.point);
      BlockVectorExpr dg = ti.gradient - tj.gradient;
      for (int l = 0; l < p; ++l) {
        ScalarExpr expr = base;
        ScalarExpr sq = inner_product(dg, dg, l);
        sq *= 1.0 / (2.0 * L[l]);
        expr -= sq;
        out.push_back({i, j, l, std::move(expr)});
      }
    }
  }
  return out;
}

namespace {

double block_dot(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  double acc = 0.0;
  for (size_t l = 0; l < a.size(); ++l) acc += a[l].dot(b[l]);
  return acc;
}

void check_consistent(const std::vector<NumericTriplet>& triplets, int p) {
  for (const auto& t : triplets) {
    if (t.blocks() != p || static_cast<int>(t.g.size()) != p)
      throw std::invalid_argument("check_finite_set: inconsistent block partition");
    for (int l = 0; l < p; ++l) {
      if (t.x[static_cast<size_t>(l)].size() != triplets.front().x[static_cast<size_t>(l)].size() ||
          t.g[static_cast<size_t>(l)].size() != triplets.front().g[static_cast<size_t>(l)].size())
        throw std::invalid_argument("check_finite_set: dimension mismatch across triplets");
      if (!t.x[static_cast<size_t>(l)].allFinite() || !t.g[static_cast<size_t>(l)].allFinite())
        throw std::invalid_argument("check_finite_set: non-finite entries");
    }
    if (!std::isfinite(t.f)) throw std::invalid_argument("check_finite_set: non-finite value");
  }
}

// Residual of the (i,j,l) inequality on explicit data.
double pair_residual(const NumericTriplet& ti, const NumericTriplet& tj, int l, double Ll) {
  double cross = 0.0;
  for (size_t s = 0; s < ti.x.size(); ++s) cross += tj.g[s].dot(ti.x[s] - tj.x[s]);
  double dg = (ti.g[static_cast<size_t>(l)] - tj.g[static_cast<size_t>(l)]).squaredNorm();
  return ti.f - tj.f - cross - dg / (2.0 * Ll);
}

}  // namespace

InterpCheckReport check_finite_set(const std::vector<NumericTriplet>& triplets,
                                   const LipschitzVector& L, double tol) {
  InterpCheckReport report;
  if (triplets.empty()) return report;
  const int p = L.size();
  check_consistent(triplets, p);
  const int n = static_cast<int>(triplets.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int l = 0; l < p; ++l) {
        double r = pair_residual(triplets[static_cast<size_t>(i)],
                                 triplets[static_cast<size_t>(j)], l, L[l]);
        if (r < report.worst_residual) report.worst_residual = r;
        if (r < -tol) {
          report.pass = false;
          report.violations.push_back({i, j, l, r});
        }
      }
    }
  }
  return report;
}

TwoPointInterpolant::TwoPointInterpolant(NumericTriplet t1, NumericTriplet t2,
                                         const LipschitzVector& L) {
  auto report = check_finite_set({t1, t2}, L, 0.0);
  if (!report.pass)
    throw std::invalid_argument("TwoPointInterpolant: pair violates the pairwise conditions");
  // Roles must be ordered so that the conjugate's quadratic coefficient is
  // the smaller of the two directions: the two coefficients sum to
  // <dx, dg>, and the endpoint subgradient argument needs 2 quad <= <dx,dg>.
  // Switching the roles of the two samples covers the reversed case.
  std::vector<Eigen::VectorXd> d12(t1.x.size());
  for (size_t l = 0; l < t1.x.size(); ++l) d12[l] = t1.x[l] - t2.x[l];
  double fwd = t1.f - t2.f - block_dot(t2.g, d12);
  for (auto& v : d12) v = -v;
  double rev = t2.f - t1.f - block_dot(t1.g, d12);
  if (fwd <= rev) {
    a_ = std::move(t1);
    b_ = std::move(t2);
    quad_ = fwd;
  } else {
    a_ = std::move(t2);
    b_ = std::move(t1);
    quad_ = rev;
  }
  std::vector<Eigen::VectorXd> dg(a_.g.size());
  for (size_t l = 0; l < a_.g.size(); ++l) dg[l] = b_.g[l] - a_.g[l];
  lin_ = block_dot(a_.x, dg);
  off_ = block_dot(a_.g, a_.x) - a_.f;
}

double TwoPointInterpolant::maximizer(const std::vector<Eigen::VectorXd>& x) const {
  // f(x) = max_{t in [0,1]} <x, t g_b + (1-t) g_a> - phi(t), concave quadratic in t.
  double beta = 0.0;
  for (size_t l = 0; l < x.size(); ++l) beta += x[l].dot(b_.g[l] - a_.g[l]);
  beta -= lin_;
  if (quad_ > 0.0) return std::clamp(beta / (2.0 * quad_), 0.0, 1.0);
  return beta > 0.0 ? 1.0 : 0.0;
}

double TwoPointInterpolant::value(const std::vector<Eigen::VectorXd>& x) const {
  double t = maximizer(x);
  double dot = 0.0;
  for (size_t l = 0; l < x.size(); ++l) dot += x[l].dot(t * b_.g[l] + (1.0 - t) * a_.g[l]);
  double phi = quad_ * t * t + lin_ * t + off_;
  return dot - phi;
}

std::vector<Eigen::VectorXd> TwoPointInterpolant::subgradient(
    const std::vector<Eigen::VectorXd>& x) const {
  double t = maximizer(x);
  std::vector<Eigen::VectorXd> g(x.size());
  for (size_t l = 0; l < x.size(); ++l) g[l] = t * b_.g[l] + (1.0 - t) * a_.g[l];
  return g;
}

NumericTriplet TwoPointInterpolant::sample(const std::vector<Eigen::VectorXd>& x) const {
  return {x, subgradient(x), value(x)};
}

namespace {

std::vector<Eigen::VectorXd> parse_blocks(const nlohmann::json& node) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& blk : node) {
    Eigen::VectorXd v(blk.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = blk.at(static_cast<size_t>(i)).get<double>();
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

TripletSet parse_triplet_set(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  std::vector<double> L = doc.at("L").get<std::vector<double>>();
  TripletSet set{LipschitzVector(L), {}};
  for (const auto& pt : doc.at("points")) {
    NumericTriplet t;
    t.x = parse_blocks(pt.at("x"));
    t.g = parse_blocks(pt.at("g"));
    t.f = pt.at("f").get<double>();
    if (t.blocks() != set.L.size())
      throw std::invalid_argument("triplet set: point block count != L length");
    set.points.push_back(std::move(t));
  }
  return set;
}

TripletSet load_triplet_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triplet set file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_triplet_set(ss.str());
}

TripletSet counterexample_triplets() {
  auto vec2 = [](double x, double y) {
    std::vector<Eigen::VectorXd> v(2);
    v[0] = Eigen::VectorXd::Constant(1, x);
    v[1] = Eigen::VectorXd::Constant(1, y);
    return v;
  };
  TripletSet set{LipschitzVector({1.0, 1.0}), {}};
  set.points.push_back({vec2(-1, 0), vec2(-1, 0), 0.5});
  set.points.push_back({vec2(0, 0), vec2(0, -1), 0.0});
  set.points.push_back({vec2(1, 0), vec2(1, 0), 0.5});
  return set;
}

}  // namespace pepbcd
