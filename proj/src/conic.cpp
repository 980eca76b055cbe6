#include "pepbcd/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pepbcd::conic {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

int svec_dim(int n) { return n * (n + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  Eigen::VectorXd v(svec_dim(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) v(k++) = (i == j) ? S(i, j) : kSqrt2 * S(i, j);
  return v;
}

Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int n) {
  Eigen::MatrixXd S(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      double x = (i == j) ? v(k) : v(k) / kSqrt2;
      S(i, j) = x;
      S(j, i) = x;
      ++k;
    }
  }
  return S;
}

int ConeDims::psd_rows() const {
  int total = 0;
  for (int n : psd) total += svec_dim(n);
  return total;
}

std::string to_string(ConeStatus status) {
  switch (status) {
    case ConeStatus::Optimal:
      return "optimal";
    case ConeStatus::Inaccurate:
      return "inaccurate";
    case ConeStatus::Infeasible:
      return "infeasible";
    case ConeStatus::Unbounded:
      return "unbounded";
    case ConeStatus::Failed:
      return "failed";
  }
  return "?";
}

namespace {

// Projection onto the dual cone {free} x {R+} x {PSD} (acting on y).
void project_dual_cone(Eigen::VectorXd& y, const ConeDims& cones) {
  int off = cones.zero;
  for (int i = 0; i < cones.nonneg; ++i) y(off + i) = std::max(0.0, y(off + i));
  off += cones.nonneg;
  for (int n : cones.psd) {
    const int t = svec_dim(n);
    Eigen::MatrixXd S = unsvec(y.segment(off, t), n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    S = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    y.segment(off, t) = svec(S);
    off += t;
  }
}

struct Scaling {
  Eigen::VectorXd D;  // row scaling, size m
  Eigen::VectorXd E;  // column scaling, size n
  double sigma = 1.0;  // extra scaling on b
  double rho = 1.0;    // extra scaling on c
};

// Ruiz equilibration; rows of one PSD block share a single factor so the
// cone geometry is preserved.
Scaling equilibrate(Eigen::SparseMatrix<double>& A, Eigen::VectorXd& b, Eigen::VectorXd& c,
                    const ConeDims& cones, int iters) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  Scaling sc;
  sc.D = Eigen::VectorXd::Ones(m);
  sc.E = Eigen::VectorXd::Ones(n);

  for (int pass = 0; pass < iters; ++pass) {
    Eigen::VectorXd rnorm = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd cnorm = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
        double a = std::abs(it.value());
        rnorm(it.row()) = std::max(rnorm(it.row()), a);
        cnorm(it.col()) = std::max(cnorm(it.col()), a);
      }
    }
    // uniform factor per PSD block: geometric mean of the block's row maxima
    int off = cones.zero + cones.nonneg;
    for (int nb : cones.psd) {
      const int t = svec_dim(nb);
      double acc = 0.0;
      int cnt = 0;
      for (int i = 0; i < t; ++i) {
        if (rnorm(off + i) > 0) {
          acc += std::log(rnorm(off + i));
          ++cnt;
        }
      }
      double g = cnt > 0 ? std::exp(acc / cnt) : 1.0;
      for (int i = 0; i < t; ++i) rnorm(off + i) = g;
      off += t;
    }
    Eigen::VectorXd dr(m), dc(n);
    for (int i = 0; i < m; ++i) dr(i) = rnorm(i) > 0 ? 1.0 / std::sqrt(rnorm(i)) : 1.0;
    for (int j = 0; j < n; ++j) dc(j) = cnorm(j) > 0 ? 1.0 / std::sqrt(cnorm(j)) : 1.0;
    A = dr.asDiagonal() * A * dc.asDiagonal();
    sc.D = sc.D.cwiseProduct(dr);
    sc.E = sc.E.cwiseProduct(dc);
  }
  b = sc.D.cwiseProduct(b);
  c = sc.E.cwiseProduct(c);
  double nb = b.norm(), nc = c.norm();
  sc.sigma = nb > 1e-12 ? 1.0 / nb : 1.0;
  sc.rho = nc > 1e-12 ? 1.0 / nc : 1.0;
  b *= sc.sigma;
  c *= sc.rho;
  return sc;
}

// KKT solve for (I+Q) z = w with Q = [[0, A', c], [-A, 0, b], [-c', -b', 0]].
class KktSolver {
 public:
  KktSolver(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
            const Eigen::VectorXd& c)
      : A_(A), m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())) {
    Eigen::SparseMatrix<double> At = A_.transpose();
    Eigen::SparseMatrix<double> I(n_, n_);
    I.setIdentity();
    Eigen::SparseMatrix<double> M = I + (At * A_).pruned();
    dense_ = n_ <= 1200;
    if (dense_) {
      dense_llt_.compute(Eigen::MatrixXd(M));
      if (dense_llt_.info() != Eigen::Success)
        throw std::runtime_error("conic: KKT factorization failed");
    } else {
      sparse_llt_.compute(M);
      if (sparse_llt_.info() != Eigen::Success)
        throw std::runtime_error("conic: KKT factorization failed");
    }
    set_bc(b, c);
  }

  // b and c enter only through the rank-one correction, so rebalancing them
  // mid-run costs one extra solve, not a refactorization.
  void set_bc(const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    h_.resize(n_ + m_);
    h_ << c, b;
    q_ = solve_m(h_);
    denom_ = 1.0 + h_.dot(q_);
  }

  // z = M^{-1} w for M = [[I, A'], [-A, I]].
  Eigen::VectorXd solve_m(const Eigen::VectorXd& w) const {
    Eigen::VectorXd rhs = w.head(n_) - A_.transpose() * w.tail(m_);
    Eigen::VectorXd zx;
    if (dense_)
      zx = dense_llt_.solve(rhs);
    else
      zx = sparse_llt_.solve(rhs);
    Eigen::VectorXd z(n_ + m_);
    z.head(n_) = zx;
    z.tail(m_) = w.tail(m_) + A_ * zx;
    return z;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& w) const {
    Eigen::VectorXd p = solve_m(w.head(n_ + m_));
    double ztau = (w(n_ + m_) + h_.dot(p)) / denom_;
    Eigen::VectorXd z(n_ + m_ + 1);
    z.head(n_ + m_) = p - ztau * q_;
    z(n_ + m_) = ztau;
    return z;
  }

 private:
  const Eigen::SparseMatrix<double>& A_;
  int m_, n_;
  Eigen::VectorXd h_, q_;
  double denom_ = 1.0;
  bool dense_ = false;
  Eigen::LLT<Eigen::MatrixXd> dense_llt_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> sparse_llt_;
};

// Type-II Anderson acceleration over the fixed-point map w -> g(w).
class Anderson {
 public:
  explicit Anderson(int memory) : memory_(memory) {}

  void push(const Eigen::VectorXd& w, const Eigen::VectorXd& gw) {
    ws_.push_back(w);
    gs_.push_back(gw);
    if (static_cast<int>(ws_.size()) > memory_ + 1) {
      ws_.erase(ws_.begin());
      gs_.erase(gs_.begin());
    }
  }

  void reset() {
    ws_.clear();
    gs_.clear();
  }

  std::optional<Eigen::VectorXd> candidate() const {
    const int k = static_cast<int>(ws_.size());
    if (k < 2) return std::nullopt;
    const int mdim = static_cast<int>(ws_.front().size());
    Eigen::MatrixXd dR(mdim, k - 1), dG(mdim, k - 1);
    for (int j = 0; j + 1 < k; ++j) {
      Eigen::VectorXd r0 = gs_[static_cast<size_t>(j)] - ws_[static_cast<size_t>(j)];
      Eigen::VectorXd r1 = gs_[static_cast<size_t>(j + 1)] - ws_[static_cast<size_t>(j + 1)];
      dR.col(j) = r1 - r0;
      dG.col(j) = gs_[static_cast<size_t>(j + 1)] - gs_[static_cast<size_t>(j)];
    }
    Eigen::VectorXd rk = gs_.back() - ws_.back();
    // regularized least squares keeps the step bounded when dR is rank
    // deficient (typical near convergence)
    Eigen::MatrixXd G = dR.transpose() * dR;
    G.diagonal().array() += 1e-12 * (1.0 + G.trace());
    Eigen::VectorXd gamma = G.ldlt().solve(dR.transpose() * rk);
    if (!gamma.allFinite()) return std::nullopt;
    return gs_.back() - dG * gamma;
  }

 private:
  int memory_;
  std::vector<Eigen::VectorXd> ws_;
  std::vector<Eigen::VectorXd> gs_;
};

// Active-set / face polishing. At moderate accuracy the tight inequalities
// and the Gram faces are identifiable; solving the two reduced least-squares
// systems (primal on the face, dual on the complementary face) then lands on
// the exact solution whenever the identification was right. The polished
// pair is accepted only if it verifies the full KKT conditions, so a wrong
// guess falls back to the plain iteration.
struct Polished {
  Eigen::VectorXd x, y, s;
  double pres, dres, gap;
};

std::optional<Polished> attempt_polish(const ConeProblem& prob, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& y0, const Eigen::VectorXd& s0,
                                       double rank_cut, double eps, int debug = 0) {
  const int m = static_cast<int>(prob.A.rows());
  const int n = static_cast<int>(prob.A.cols());
  const auto& cones = prob.cones;
  const int m_eq = cones.zero;
  const int m_in = cones.nonneg;
  const int m_psd = cones.psd_rows();
  if (m_eq + m_in + m_psd != m || m_psd == 0) return std::nullopt;

  Eigen::MatrixXd A_dense(prob.A);

  // each PSD row must tie one variable to the cone slack: s_row = x_col
  const int psd_row0 = m_eq + m_in;
  std::vector<int> psd_col(static_cast<size_t>(m_psd), -1);
  std::vector<bool> is_gram(static_cast<size_t>(n), false);
  for (int k = 0; k < m_psd; ++k) {
    if (prob.b(psd_row0 + k) != 0.0) return std::nullopt;
    int col = -1;
    for (int j = 0; j < n; ++j) {
      double a = A_dense(psd_row0 + k, j);
      if (a == 0.0) continue;
      if (a != -1.0 || col >= 0) return std::nullopt;
      col = j;
    }
    if (col < 0 || is_gram[static_cast<size_t>(col)]) return std::nullopt;
    psd_col[static_cast<size_t>(k)] = col;
    is_gram[static_cast<size_t>(col)] = true;
  }
  std::vector<int> free_cols;
  for (int j = 0; j < n; ++j)
    if (!is_gram[static_cast<size_t>(j)]) free_cols.push_back(j);
  const int nf = static_cast<int>(free_cols.size());

  // face bases from the current Gram blocks
  std::vector<Eigen::MatrixXd> Z, W;
  std::vector<int> blk_row0(cones.psd.size());
  {
    int off = 0;
    for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
      const int nb = cones.psd[bi];
      const int t = svec_dim(nb);
      blk_row0[bi] = off;
      Eigen::VectorXd g(t);
      for (int k = 0; k < t; ++k) g(k) = x0(psd_col[static_cast<size_t>(off + k)]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(unsvec(g, nb));
      double lmax = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
      int r = 0;
      for (int i = 0; i < nb; ++i)
        if (eig.eigenvalues()(i) > rank_cut * lmax) ++r;
      if (r == 0) r = 1;
      if (debug >= 2) {
        std::printf("  blk %zu eigs:", bi);
        for (int i = 0; i < nb; ++i) std::printf(" %.1e", eig.eigenvalues()(i));
        std::printf("\n");
      }
      Z.push_back(eig.eigenvectors().rightCols(r));
      W.push_back(eig.eigenvectors().leftCols(nb - r));
      off += t;
    }
  }

  // active inequalities by complementarity magnitude
  std::vector<int> active;
  for (int i = 0; i < m_in; ++i)
    if (y0(m_eq + i) > s0(m_eq + i)) active.push_back(m_eq + i);

  // reduced primal variables: [free coords; svec(Ghat_1); ...]
  std::vector<int> ghat_off(cones.psd.size());
  int nvar = nf;
  for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
    ghat_off[bi] = nvar;
    nvar += svec_dim(static_cast<int>(Z[bi].cols()));
  }
  auto reduced_row = [&](int row, Eigen::VectorXd& out) {
    out.setZero(nvar);
    for (int j = 0; j < nf; ++j) out(j) = A_dense(row, free_cols[static_cast<size_t>(j)]);
    for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
      const int nb = cones.psd[bi];
      const int t = svec_dim(nb);
      Eigen::VectorXd g(t);
      for (int k = 0; k < t; ++k) g(k) = A_dense(row, psd_col[static_cast<size_t>(blk_row0[bi] + k)]);
      if (g.isZero(0.0)) continue;
      Eigen::MatrixXd Chat = Z[bi].transpose() * unsvec(g, nb) * Z[bi];
      out.segment(ghat_off[bi], svec_dim(static_cast<int>(Z[bi].cols()))) = svec(Chat);
    }
  };

  const int mrows = m_eq + static_cast<int>(active.size());
  Eigen::MatrixXd E(mrows, nvar);
  Eigen::VectorXd d(mrows);
  {
    Eigen::VectorXd row;
    int r = 0;
    for (int i = 0; i < m_eq; ++i, ++r) {
      reduced_row(i, row);
      E.row(r) = row;
      d(r) = prob.b(i);
    }
    for (int i : active) {
      reduced_row(i, row);
      E.row(r) = row;
      d(r) = prob.b(i);
      ++r;
    }
  }
  Eigen::VectorXd sol = E.completeOrthogonalDecomposition().solve(d);

  Polished out;
  out.x.setZero(n);
  for (int j = 0; j < nf; ++j) out.x(free_cols[static_cast<size_t>(j)]) = sol(j);
  for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
    const int nb = cones.psd[bi];
    const int rb = static_cast<int>(Z[bi].cols());
    Eigen::MatrixXd Ghat = unsvec(sol.segment(ghat_off[bi], svec_dim(rb)), rb);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Ghat);
    if (eig.eigenvalues().minCoeff() < -1e-7 * std::max(1.0, Ghat.norm())) {
      if (debug) std::printf("  polish cut=%.0e: Ghat indefinite (%.2e)\n", rank_cut,
                             eig.eigenvalues().minCoeff());
      return std::nullopt;
    }
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    Ghat = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd g = svec(Z[bi] * Ghat * Z[bi].transpose());
    for (int k = 0; k < svec_dim(nb); ++k) out.x(psd_col[static_cast<size_t>(blk_row0[bi] + k)]) = g(k);
  }

  // dual least squares: y on equalities and active rows plus the
  // complementary-face multipliers; stationarity c + A'y = 0
  std::vector<int> yvars;
  for (int i = 0; i < m_eq; ++i) yvars.push_back(i);
  for (int i : active) yvars.push_back(i);
  std::vector<int> shat_off(cones.psd.size());
  int ndual = static_cast<int>(yvars.size());
  for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
    shat_off[bi] = ndual;
    ndual += svec_dim(static_cast<int>(W[bi].cols()));
  }
  Eigen::MatrixXd Ed = Eigen::MatrixXd::Zero(n, ndual);
  for (size_t j = 0; j < yvars.size(); ++j)
    Ed.col(static_cast<Eigen::Index>(j)) = A_dense.row(yvars[j]).transpose();
  for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
    const int nb = cones.psd[bi];
    const int wb = static_cast<int>(W[bi].cols());
    for (int k = 0; k < svec_dim(wb); ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(svec_dim(wb));
      e(k) = 1.0;
      Eigen::VectorXd scol = svec(W[bi] * unsvec(e, wb) * W[bi].transpose());
      for (int q = 0; q < svec_dim(nb); ++q)
        Ed(psd_col[static_cast<size_t>(blk_row0[bi] + q)], shat_off[bi] + k) = -scol(q);
    }
  }
  // ridge-regularized toward the current ADMM duals: the pure least squares
  // problem is rank deficient when strict complementarity fails
  Eigen::VectorXd yd_init = Eigen::VectorXd::Zero(ndual);
  for (size_t j = 0; j < yvars.size(); ++j) yd_init(static_cast<Eigen::Index>(j)) = y0(yvars[j]);
  for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
    const int nb = cones.psd[bi];
    const int wb = static_cast<int>(W[bi].cols());
    if (wb == 0) continue;
    Eigen::VectorXd s0blk(svec_dim(nb));
    for (int q = 0; q < svec_dim(nb); ++q)
      s0blk(q) = y0(psd_row0 + blk_row0[bi] + q);
    Eigen::MatrixXd Shat0 = W[bi].transpose() * unsvec(s0blk, nb) * W[bi];
    yd_init.segment(shat_off[bi], svec_dim(wb)) = svec(Shat0);
  }
  Eigen::MatrixXd EtE = Ed.transpose() * Ed;
  double ridge = 1e-9 * (1.0 + EtE.trace() / ndual);
  EtE.diagonal().array() += ridge;
  Eigen::VectorXd yd =
      EtE.ldlt().solve(Ed.transpose() * (-prob.c) + ridge * yd_init);

  out.y.setZero(m);
  for (size_t j = 0; j < yvars.size(); ++j) out.y(yvars[j]) = yd(static_cast<Eigen::Index>(j));
  for (size_t bi = 0; bi < cones.psd.size(); ++bi) {
    const int nb = cones.psd[bi];
    const int wb = static_cast<int>(W[bi].cols());
    Eigen::MatrixXd Shat = unsvec(yd.segment(shat_off[bi], svec_dim(wb)), wb);
    if (wb > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Shat);
      if (eig.eigenvalues().minCoeff() < -1e-7 * std::max(1.0, Shat.norm())) {
        if (debug) std::printf("  polish cut=%.0e: Shat indefinite (%.2e)\n", rank_cut,
                               eig.eigenvalues().minCoeff());
        return std::nullopt;
      }
      Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
      Shat = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    }
    Eigen::VectorXd scol = svec(W[bi] * Shat * W[bi].transpose());
    for (int q = 0; q < svec_dim(nb); ++q)
      out.y(psd_row0 + blk_row0[bi] + q) = scol(q);
  }
  for (int i = m_eq; i < m_eq + m_in; ++i)
    if (out.y(i) < 0.0) {
      if (out.y(i) < -1e-7) {
        if (debug) std::printf("  polish cut=%.0e: negative multiplier %.2e\n", rank_cut, out.y(i));
        return std::nullopt;
      }
      out.y(i) = 0.0;
    }

  out.s = prob.b - prob.A * out.x;
  for (int i = 0; i < m_eq; ++i) out.s(i) = 0.0;
  for (int i = m_eq; i < m_eq + m_in; ++i) {
    if (out.s(i) < -10 * eps) {
      if (debug) std::printf("  polish cut=%.0e: slack violation %.2e\n", rank_cut, out.s(i));
      return std::nullopt;
    }
    out.s(i) = std::max(0.0, out.s(i));
  }

  double cx = prob.c.dot(out.x);
  double by = prob.b.dot(out.y);
  out.pres = (prob.A * out.x + out.s - prob.b).norm() / (1.0 + prob.b.norm());
  out.dres = (prob.A.transpose() * out.y + prob.c).norm() / (1.0 + prob.c.norm());
  out.gap = std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));
  if (debug) {
    std::printf("  polish cut=%.0e: act=%zu ranks=", rank_cut, active.size());
    for (auto& z : Z) std::printf("%d/", (int)z.cols());
    std::printf(" pres=%.2e dres=%.2e gap=%.2e dualLSres=%.2e\n", out.pres, out.dres, out.gap,
                (Ed * yd + prob.c).norm());
  }
  if (out.pres > eps || out.dres > eps || out.gap > eps) return std::nullopt;
  return out;
}

struct Embedding {
  const KktSolver& kkt;
  const ConeDims& cones;
  int n, m;
  double alpha;

  // One relaxed DR pass; returns g(w) and exposes the split point.
  Eigen::VectorXd apply(const Eigen::VectorXd& w, Eigen::VectorXd* u_out = nullptr,
                        Eigen::VectorXd* v_out = nullptr) const {
    Eigen::VectorXd utilde = kkt.solve(w);
    Eigen::VectorXd z = 2.0 * utilde - w;
    Eigen::VectorXd u = z;
    // projection onto R^n x K* x R+
    Eigen::VectorXd ypart = u.segment(n, m);
    project_dual_cone(ypart, cones);
    u.segment(n, m) = ypart;
    u(n + m) = std::max(0.0, u(n + m));
    if (u_out) *u_out = u;
    if (v_out) *v_out = u - z;  // exact member of {0} x K x R+
    return w + alpha * (u - utilde);
  }
};

}  // namespace

ConeSolution solve_cone(const ConeProblem& problem, const ConeOptions& options) {
  const int m = static_cast<int>(problem.A.rows());
  const int n = static_cast<int>(problem.A.cols());
  if (problem.cones.rows() != m)
    throw std::invalid_argument("solve_cone: cone dims do not match A rows");
  if (problem.b.size() != m || problem.c.size() != n)
    throw std::invalid_argument("solve_cone: b/c size mismatch");

  ConeSolution sol;
  if (m == 0) {
    // no constraints: optimum 0 at x = 0, or unbounded along -c
    sol.x = Eigen::VectorXd::Zero(n);
    sol.y = Eigen::VectorXd();
    sol.s = Eigen::VectorXd();
    sol.status = problem.c.norm() > 0 ? ConeStatus::Unbounded : ConeStatus::Optimal;
    return sol;
  }

  Eigen::SparseMatrix<double> A = problem.A;
  Eigen::VectorXd b = problem.b;
  Eigen::VectorXd c = problem.c;
  Scaling sc;
  if (options.equilibrate) {
    sc = equilibrate(A, b, c, problem.cones, options.ruiz_iters);
  } else {
    sc.D = Eigen::VectorXd::Ones(m);
    sc.E = Eigen::VectorXd::Ones(n);
  }
  if (options.rho_bc != 1.0) {
    b *= options.rho_bc;
    sc.sigma *= options.rho_bc;
    c /= options.rho_bc;
    sc.rho /= options.rho_bc;
  }

  KktSolver kkt(A, b, c);
  Embedding embed{kkt, problem.cones, n, m, options.alpha};

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n + m + 1);
  if (options.warm_start && options.warm_start->size() == w.size()) {
    w = *options.warm_start;
  } else {
    w(n + m) = 1.0;
  }

  Anderson aa(options.aa_memory);
  const double norm_b_orig = problem.b.norm();
  const double norm_c_orig = problem.c.norm();

  double last_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd fallback;  // plain iterate to revert to if AA diverges
  bool used_aa = false;
  int last_rescale = 0;
  int last_polish = -1000000;
  int polish_backoff = 1000;
  double rescale_total = 1.0;

  auto finish = [&](ConeStatus status, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                    int iter) {
    double tau = u(n + m);
    sol.status = status;
    sol.iters = iter;
    if (tau > 0) {
      sol.x = sc.E.cwiseProduct(u.head(n)) / (tau * sc.sigma);
      sol.y = sc.D.cwiseProduct(u.segment(n, m)) / (tau * sc.rho);
      sol.s = v.segment(n, m).cwiseQuotient(sc.D) / (tau * sc.sigma);
      sol.primal_obj = problem.c.dot(sol.x);
      sol.dual_obj = -problem.b.dot(sol.y);
    }
    sol.w = w;
  };

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    Eigen::VectorXd u, v;
    Eigen::VectorXd gw = embed.apply(w, &u, &v);

    if (options.aa_memory > 0) {
      aa.push(w, gw);
      double res = (gw - w).norm();
      if (used_aa && res > 1.02 * last_residual && fallback.size() == w.size()) {
        // acceleration overshoot: fall back to the stored plain iterate
        w = fallback;
        aa.reset();
        used_aa = false;
        last_residual = std::numeric_limits<double>::infinity();
        continue;
      }
      last_residual = res;
      fallback = gw;
      auto cand = aa.candidate();
      if (cand) {
        w = *cand;
        used_aa = true;
      } else {
        w = gw;
        used_aa = false;
      }
    } else {
      w = gw;
    }

    if (iter % options.check_interval != 0 && iter != options.max_iters) continue;

    double tau = u(n + m);
    if (tau > 1e-10) {
      // unscaled candidate solution
      Eigen::VectorXd x = sc.E.cwiseProduct(u.head(n)) / (tau * sc.sigma);
      Eigen::VectorXd y = sc.D.cwiseProduct(u.segment(n, m)) / (tau * sc.rho);
      Eigen::VectorXd s = v.segment(n, m).cwiseQuotient(sc.D) / (tau * sc.sigma);
      double cx = problem.c.dot(x);
      double by = problem.b.dot(y);
      double pres = (problem.A * x + s - problem.b).norm() / (1.0 + norm_b_orig);
      double dres = (problem.A.transpose() * y + problem.c).norm() / (1.0 + norm_c_orig);
      double gap = std::abs(cx + by) / (1.0 + std::abs(cx) + std::abs(by));
      sol.primal_res = pres;
      sol.dual_res = dres;
      sol.gap = gap;
      if (options.verbose > 0 && iter % options.verbose == 0)
        std::printf("  it %7d pres %.3e dres %.3e gap %.3e obj %.9f tau %.3e\n", iter, pres,
                    dres, gap, cx, tau);
      if (pres < options.eps && dres < options.eps && gap < options.eps) {
        finish(ConeStatus::Optimal, u, v, iter);
        return sol;
      }
      if (options.polish && std::max({pres, dres, gap}) < options.polish_trigger &&
          iter - last_polish >= polish_backoff) {
        last_polish = iter;
        polish_backoff = std::min(4 * polish_backoff, 64000);
        for (double rank_cut : {1e-5, 1e-3, 1e-7}) {
          auto polished = attempt_polish(problem, x, y, s, rank_cut, options.eps,
                                         options.verbose > 0 ? options.verbose : 0);
          if (polished) {
            sol.status = ConeStatus::Optimal;
            sol.x = polished->x;
            sol.y = polished->y;
            sol.s = polished->s;
            sol.primal_obj = problem.c.dot(sol.x);
            sol.dual_obj = -problem.b.dot(sol.y);
            sol.primal_res = polished->pres;
            sol.dual_res = polished->dres;
            sol.gap = polished->gap;
            sol.iters = iter;
            sol.w = w;
            return sol;
          }
        }
      }
      // rebalance the b/c scales when the residuals drift apart; the state
      // is split into (u, v), rescaled coordinate-wise and recombined
      if (iter - last_rescale >= 500 && (pres > 5.0 * dres || dres > 5.0 * pres)) {
        double phi = std::sqrt(std::max(1e-6, std::min(1e6, pres / dres)));
        phi = std::clamp(phi, 0.1, 10.0);
        double total = rescale_total * phi;
        if (total > 1e-4 && total < 1e4 && std::abs(std::log(phi)) > 0.1) {
          rescale_total = total;
          b *= phi;
          sc.sigma *= phi;
          c /= phi;
          sc.rho /= phi;
          kkt.set_bc(b, c);
          Eigen::VectorXd u2 = u, v2 = v;
          u2.head(n) *= phi;          // x side scales with b
          u2.segment(n, m) /= phi;    // y side scales with c
          v2.segment(n, m) *= phi;    // slack side scales with b
          w = u2 + v2;
          aa.reset();
          used_aa = false;
          last_residual = std::numeric_limits<double>::infinity();
          fallback.resize(0);
          last_rescale = iter;
          continue;
        }
      }
    }
    // certificates of primal infeasibility / unboundedness
    Eigen::VectorXd ydir = sc.D.cwiseProduct(u.segment(n, m));
    double bty = problem.b.dot(ydir) / sc.rho;
    if (bty < -1e-12) {
      double res = (problem.A.transpose() * ydir).norm() / sc.rho;
      if (res / (-bty) * std::max(1.0, norm_b_orig) < options.eps_infeasible * 1e3) {
        finish(ConeStatus::Infeasible, u, v, iter);
        return sol;
      }
    }
    Eigen::VectorXd xdir = sc.E.cwiseProduct(u.head(n));
    double ctx = problem.c.dot(xdir) / sc.sigma;
    if (ctx < -1e-12) {
      Eigen::VectorXd sdir = v.segment(n, m).cwiseQuotient(sc.D) / sc.sigma;
      double res = (problem.A * xdir / sc.sigma + sdir).norm();
      if (res / (-ctx) * std::max(1.0, norm_c_orig) < options.eps_infeasible * 1e3) {
        finish(ConeStatus::Unbounded, u, v, iter);
        return sol;
      }
    }
  }

  // max iterations: classify by the best residuals seen
  Eigen::VectorXd u, v;
  embed.apply(w, &u, &v);
  double loose = std::max(1e-6, options.eps * 1e3);
  ConeStatus status = (sol.primal_res < loose && sol.dual_res < loose && sol.gap < loose)
                          ? ConeStatus::Inaccurate
                          : ConeStatus::Failed;
  finish(status, u, v, options.max_iters);
  return sol;
}

}  // namespace pepbcd::conic
