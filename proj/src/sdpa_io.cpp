#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pepbcd/pep.hpp"

// Sparse SDPA text format (".dat-s"). The exported problem is the dual form
// max F_0 . Y s.t. F_k . Y = c_k, Y psd block-diagonal: p Gram blocks plus
// one diagonal block holding the split free scalars (f = f+ - f-) and one
// slack per inequality. Comment lines carry the objective sense and
// constant, which generic SDPA tools ignore.

namespace pepbcd {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Entry {
  int mat, blk, i, j;
  double value;
};

}  // namespace

void export_sdpa(const SdpProblem& problem, const std::string& path) {
  const int p = problem.blocks;
  const int nf = problem.num_fvals;
  int num_ineq = 0;
  for (const auto& c : problem.constraints)
    if (!c.equality) ++num_ineq;
  const int diag_size = 2 * nf + num_ineq;
  const int m = static_cast<int>(problem.constraints.size());

  std::vector<Entry> entries;
  std::vector<double> rhs(static_cast<size_t>(m), 0.0);

  // matno 0 is the objective; diagonal positions: f_v+ -> 2v+1, f_v- -> 2v+2
  // (1-based), slack of inequality q -> 2 nf + q + 1.
  auto emit = [&](int mat, const ScalarExpr& expr) {
    for (int l = 0; l < p; ++l)
      for (const auto& [key, coeff] : expr.gram_terms(l))
        entries.push_back({mat, l + 1, key.first + 1, key.second + 1, coeff});
    for (const auto& [sym, coeff] : expr.fval_terms()) {
      entries.push_back({mat, p + 1, 2 * sym + 1, 2 * sym + 1, coeff});
      entries.push_back({mat, p + 1, 2 * sym + 2, 2 * sym + 2, -coeff});
    }
  };

  const bool flip = !problem.maximize;
  {
    ScalarExpr obj = problem.objective;
    if (flip) obj *= -1.0;
    emit(0, obj);
  }
  int slack = 0;
  for (int k = 0; k < m; ++k) {
    const auto& pc = problem.constraints[static_cast<size_t>(k)];
    emit(k + 1, pc.expr);
    if (!pc.equality) {
      entries.push_back({k + 1, p + 1, 2 * nf + slack + 1, 2 * nf + slack + 1, -1.0});
      ++slack;
    }
    rhs[static_cast<size_t>(k)] = -pc.expr.constant_term();
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_sdpa: cannot open " + path);
  out << "\"pepbcd sdpa export\n";
  out << "\"objective-sense: " << (problem.maximize ? "max" : "min") << "\n";
  out << "\"objective-constant: " << fmt(problem.objective.constant_term()) << "\n";
  for (const auto& [key, value] : problem.metadata)
    out << "\"" << key << ": " << value << "\n";
  out << m << "\n";
  out << (p + 1) << "\n";
  for (int l = 0; l < p; ++l) out << problem.gram_dim << " ";
  out << -diag_size << "\n";
  for (int k = 0; k < m; ++k) out << fmt(rhs[static_cast<size_t>(k)]) << (k + 1 < m ? " " : "");
  out << "\n";
  for (const auto& e : entries) {
    if (e.value == 0.0) continue;
    out << e.mat << " " << e.blk << " " << e.i << " " << e.j << " " << fmt(e.value) << "\n";
  }
  if (!out) throw std::runtime_error("export_sdpa: write failed for " + path);
}

namespace {

void strip_decorations(std::string& line) {
  for (char& c : line)
    if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',' || c == ';') c = ' ';
}

}  // namespace

SdpaProblem read_sdpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sdpa: cannot open " + path);

  SdpaProblem out;
  std::string line;
  std::vector<std::string> data_lines;
  while (std::getline(in, line)) {
    if (!line.empty() && (line[0] == '"' || line[0] == '*')) {
      auto pos = line.find("objective-sense:");
      if (pos != std::string::npos) {
        std::string sense = line.substr(pos + 16);
        out.maximize = sense.find("max") != std::string::npos;
      }
      pos = line.find("objective-constant:");
      if (pos != std::string::npos) out.objective_offset = std::stod(line.substr(pos + 19));
      continue;
    }
    strip_decorations(line);
    if (line.find_first_not_of(" \t\r\n") != std::string::npos) data_lines.push_back(line);
  }
  if (data_lines.size() < 3) throw std::runtime_error("read_sdpa: truncated file");

  size_t cursor = 0;
  auto next_line = [&]() -> std::istringstream {
    if (cursor >= data_lines.size()) throw std::runtime_error("read_sdpa: unexpected end of file");
    return std::istringstream(data_lines[cursor++]);
  };

  int m = 0, nblocks = 0;
  next_line() >> m;
  next_line() >> nblocks;
  std::vector<int> sizes;
  {
    auto ls = next_line();
    int v;
    while (ls >> v) sizes.push_back(v);
  }
  if (static_cast<int>(sizes.size()) != nblocks)
    throw std::runtime_error("read_sdpa: block structure length mismatch");
  std::vector<double> rhs;
  while (static_cast<int>(rhs.size()) < m) {
    auto ls = next_line();
    double v;
    while (ls >> v) rhs.push_back(v);
  }
  if (static_cast<int>(rhs.size()) != m) throw std::runtime_error("read_sdpa: rhs length mismatch");

  // variable layout: svec of each PSD block, then the diagonal entries
  std::vector<int> psd_sizes;
  std::vector<int> block_var_offset(sizes.size(), -1);
  int nvars = 0, diag_total = 0;
  for (size_t bi = 0; bi < sizes.size(); ++bi) {
    if (sizes[bi] > 0) {
      block_var_offset[bi] = nvars;
      psd_sizes.push_back(sizes[bi]);
      nvars += conic::svec_dim(sizes[bi]);
    }
  }
  std::vector<int> diag_var_offset(sizes.size(), -1);
  for (size_t bi = 0; bi < sizes.size(); ++bi) {
    if (sizes[bi] < 0) {
      diag_var_offset[bi] = nvars + diag_total;
      diag_total += -sizes[bi];
    }
  }
  const int total_vars = nvars + diag_total;

  Eigen::VectorXd objective = Eigen::VectorXd::Zero(total_vars);
  std::vector<Eigen::Triplet<double>> trip;
  auto var_coeff = [&](int blk, int i, int j, double v, auto&& sink) {
    size_t bi = static_cast<size_t>(blk - 1);
    if (bi >= sizes.size()) throw std::runtime_error("read_sdpa: block index out of range");
    if (sizes[bi] > 0) {
      int a = std::min(i, j) - 1, b = std::max(i, j) - 1;
      int idx = block_var_offset[bi] + b * (b + 1) / 2 + a;
      sink(idx, (a == b) ? v : kSqrt2 * v);
    } else {
      if (i != j) throw std::runtime_error("read_sdpa: off-diagonal entry in diagonal block");
      sink(diag_var_offset[bi] + i - 1, v);
    }
  };

  while (cursor < data_lines.size()) {
    auto ls = next_line();
    int mat, blk, i, j;
    double v;
    if (!(ls >> mat >> blk >> i >> j >> v)) continue;
    if (mat < 0 || mat > m) throw std::runtime_error("read_sdpa: matrix index out of range");
    if (mat == 0) {
      var_coeff(blk, i, j, v, [&](int idx, double w) { objective(idx) += w; });
    } else {
      var_coeff(blk, i, j, v,
                [&](int idx, double w) { trip.emplace_back(mat - 1, idx, w); });
    }
  }

  // cone rows: the m equalities, then diag >= 0, then the PSD blocks
  conic::ConeProblem cone;
  cone.cones.zero = m;
  cone.cones.nonneg = diag_total;
  cone.cones.psd = psd_sizes;
  const int rows = m + diag_total + cone.cones.psd_rows();
  cone.b = Eigen::VectorXd::Zero(rows);
  for (int k = 0; k < m; ++k) cone.b(k) = rhs[static_cast<size_t>(k)];
  std::vector<Eigen::Triplet<double>> A_entries = trip;
  for (int d = 0; d < diag_total; ++d) A_entries.emplace_back(m + d, nvars + d, -1.0);
  int row = m + diag_total;
  for (int k = 0; k < nvars; ++k) A_entries.emplace_back(row + k, k, -1.0);
  cone.A.resize(rows, total_vars);
  cone.A.setFromTriplets(A_entries.begin(), A_entries.end());
  cone.A.makeCompressed();
  cone.c = -objective;  // the file's dual form maximizes F_0 . Y

  out.cone = std::move(cone);
  out.m = m;
  out.block_sizes = sizes;
  return out;
}

double SdpaProblem::value_from(const conic::ConeSolution& sol) const {
  double d_value = -sol.primal_obj;
  return maximize ? d_value + objective_offset : -d_value + objective_offset;
}

}  // namespace pepbcd
