#include "tlnmem/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace tlnmem::num {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// sym_eig
// ---------------------------------------------------------------------------

SymEig sym_eig(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw NumericsError("sym_eig: matrix not square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw NumericsError("sym_eig: matrix not symmetric (|M - M'| = " +
                        std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success)
    throw NumericsError("sym_eig: eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

// ---------------------------------------------------------------------------
// lp_solve: two-phase dense simplex with Bland's rule
// ---------------------------------------------------------------------------

namespace {

// Internal standard form: minimize f'z subject to G z + s = h, z >= 0,
// with artificials for rows whose rhs is negative. The tableau carries
// structural, slack and artificial columns plus the rhs.
class SimplexTableau {
 public:
  SimplexTableau(const Eigen::MatrixXd& G, const Eigen::VectorXd& h)
      : m_(static_cast<int>(G.rows())), n_(static_cast<int>(G.cols())) {
    ncols_ = n_ + m_ + m_;  // structural + slack + artificial
    T_.setZero(m_, ncols_ + 1);
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      double sgn = h(i) < 0 ? -1.0 : 1.0;
      T_.row(i).head(n_) = sgn * G.row(i);
      T_(i, n_ + i) = sgn;  // slack
      T_(i, ncols_) = sgn * h(i);
      if (h(i) < 0) {
        T_(i, n_ + m_ + i) = 1.0;  // artificial becomes basic
        basis_[i] = n_ + m_ + i;
      } else {
        basis_[i] = n_ + i;
      }
    }
  }

  // Minimizes cost'z over the current feasible tableau. Columns at or past
  // col_limit are never allowed to enter. Returns false when unbounded.
  bool run(const Eigen::VectorXd& cost, int col_limit) {
    // Reduced cost row: r = cost - cost_B' B^-1 A, maintained explicitly.
    Eigen::VectorXd r = Eigen::VectorXd::Zero(ncols_);
    r.head(cost.size()) = cost;
    double obj = 0.0;
    for (int i = 0; i < m_; ++i) {
      double cb = basis_[i] < cost.size() ? cost(basis_[i]) : 0.0;
      if (cb != 0.0) {
        r -= cb * T_.row(i).head(ncols_);
        obj -= cb * T_(i, ncols_);
      }
    }
    const double tol = 1e-9;
    const int max_pivots = 50000;
    for (int it = 0; it < max_pivots; ++it) {
      // Bland: entering column = lowest index with negative reduced cost.
      int enter = -1;
      for (int j = 0; j < col_limit; ++j) {
        if (r(j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        objective_ = -obj;  // obj accumulated negated
        return true;
      }
      // Ratio test; ties broken by lowest basis index (Bland).
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < m_; ++i) {
        double a = T_(i, enter);
        if (a > tol) {
          double ratio = T_(i, ncols_) / a;
          if (ratio < best - 1e-12 ||
              (ratio < best + 1e-12 && (leave < 0 || basis_[i] < basis_[leave]))) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter, r, obj);
    }
    objective_ = -obj;
    return true;  // pivot budget exhausted; caller sees current point
  }

  double objective() const { return objective_; }

  Eigen::VectorXd primal(int n_structural) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(ncols_);
    for (int i = 0; i < m_; ++i) z(basis_[i]) = T_(i, ncols_);
    return z.head(n_structural);
  }

  double artificial_sum() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_ + m_) s += T_(i, ncols_);
    return s;
  }

  // After phase 1, pivot remaining artificials out of the basis where
  // possible (degenerate rows) so phase 2 never reactivates them.
  void expel_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_ + m_) continue;
      for (int j = 0; j < n_ + m_; ++j) {
        if (std::abs(T_(i, j)) > 1e-9) {
          Eigen::VectorXd dummy_r = Eigen::VectorXd::Zero(ncols_);
          double dummy_obj = 0.0;
          pivot(i, j, dummy_r, dummy_obj);
          break;
        }
      }
    }
  }

  int num_structural_and_slack() const { return n_ + m_; }

 private:
  void pivot(int row, int col, Eigen::VectorXd& r, double& obj) {
    T_.row(row) /= T_(row, col);
    for (int i = 0; i < m_; ++i) {
      if (i != row && std::abs(T_(i, col)) > 0.0)
        T_.row(i) -= T_(i, col) * T_.row(row);
    }
    if (r.size() == ncols_ && std::abs(r(col)) > 0.0) {
      obj -= r(col) * T_(row, ncols_);
      r -= r(col) * T_.row(row).head(ncols_);
    }
    basis_[row] = col;
  }

  int m_, n_, ncols_;
  Eigen::MatrixXd T_;
  std::vector<int> basis_;
  double objective_ = 0.0;
};

}  // namespace

LpResult lp_solve(const LpProblem& prob) {
  const int n = static_cast<int>(prob.c.size());
  if (prob.A.size() > 0 && prob.A.cols() != n)
    throw NumericsError("lp_solve: A column count does not match c");
  Eigen::VectorXd lo = prob.lo.size() ? prob.lo : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd hi = prob.hi.size() ? prob.hi : Eigen::VectorXd::Constant(n, kInf);
  if (lo.size() != n || hi.size() != n)
    throw NumericsError("lp_solve: bound size mismatch");

  // Map each variable to nonnegative internals: shifted when a finite bound
  // exists on at least one side, split into plus/minus parts when free.
  // col_of[j] is the first internal column of variable j.
  struct VarMap {
    int col;
    bool flipped;    // x = hi - z       (only hi finite)
    bool split;      // x = z+ - z-      (both bounds infinite)
    double shift;    // x = z + lo       (lo finite)
  };
  std::vector<VarMap> vmap(n);
  int ncols = 0;
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(lo(j))) {
      vmap[j] = {ncols++, false, false, lo(j)};
    } else if (std::isfinite(hi(j))) {
      vmap[j] = {ncols++, true, false, hi(j)};
    } else {
      vmap[j] = {ncols, false, true, 0.0};
      ncols += 2;
    }
  }

  const int m_ineq = static_cast<int>(prob.A.rows());
  int m_bound = 0;  // upper-bound rows for doubly bounded variables
  for (int j = 0; j < n; ++j)
    if (std::isfinite(lo(j)) && std::isfinite(hi(j))) ++m_bound;

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m_ineq + m_bound, ncols);
  Eigen::VectorXd h(m_ineq + m_bound);
  double obj_shift = 0.0;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(ncols);  // internal minimize cost

  auto scatter = [&](int row, int j, double coef, Eigen::MatrixXd& M) {
    const VarMap& v = vmap[j];
    if (v.split) {
      M(row, v.col) += coef;
      M(row, v.col + 1) -= coef;
    } else if (v.flipped) {
      M(row, v.col) -= coef;
    } else {
      M(row, v.col) += coef;
    }
  };

  for (int i = 0; i < m_ineq; ++i) {
    double rhs = prob.b(i);
    for (int j = 0; j < n; ++j) {
      double a = prob.A(i, j);
      if (a == 0.0) continue;
      scatter(i, j, a, G);
      const VarMap& v = vmap[j];
      if (!v.split) rhs -= a * v.shift;
    }
    h(i) = rhs;
  }
  {
    int row = m_ineq;
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(lo(j)) && std::isfinite(hi(j))) {
        G(row, vmap[j].col) = 1.0;
        h(row) = hi(j) - lo(j);
        ++row;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    double cj = prob.c(j);
    const VarMap& v = vmap[j];
    if (v.split) {
      f(v.col) -= cj;
      f(v.col + 1) += cj;
    } else if (v.flipped) {
      f(v.col) += cj;
      obj_shift += cj * v.shift;
    } else {
      f(v.col) -= cj;
      obj_shift += cj * v.shift;
    }
  }

  SimplexTableau tab(G, h);
  const int total_cols = tab.num_structural_and_slack() + static_cast<int>(G.rows());

  // Phase 1: minimize the artificial sum.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total_cols);
  for (int j = tab.num_structural_and_slack(); j < total_cols; ++j) phase1(j) = 1.0;
  tab.run(phase1, total_cols);
  if (tab.artificial_sum() > 1e-7) return {LpStatus::Infeasible, {}, 0.0};
  tab.expel_artificials();

  // Phase 2: artificials barred from entering.
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(total_cols);
  phase2.head(ncols) = f;
  if (!tab.run(phase2, tab.num_structural_and_slack()))
    return {LpStatus::Unbounded, {}, 0.0};

  Eigen::VectorXd z = tab.primal(ncols);
  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j) {
    const VarMap& v = vmap[j];
    if (v.split)
      x(j) = z(v.col) - z(v.col + 1);
    else if (v.flipped)
      x(j) = v.shift - z(v.col);
    else
      x(j) = z(v.col) + v.shift;
  }
  return {LpStatus::Optimal, x, prob.c.dot(x)};
}

// ---------------------------------------------------------------------------
// sdp_solve: log-det barrier with Newton steps
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd sdp_block_value(const SdpBlock& blk, const Eigen::VectorXd& x) {
  Eigen::MatrixXd F = blk.F0;
  for (const auto& [idx, Fi] : blk.terms) F += x(idx) * Fi;
  return 0.5 * (F + F.transpose());
}

bool strictly_feasible(const std::vector<SdpBlock>& blocks, const Eigen::VectorXd& x,
                       double margin = 0.0) {
  for (const auto& blk : blocks) {
    Eigen::MatrixXd S = -sdp_block_value(blk, x);
    if (margin != 0.0) S.diagonal().array() -= margin;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

// Newton minimization of t*c'x - sum_b log det(-F_b(x)) from a strictly
// feasible x. Returns false when progress stalls before reaching the
// decrement tolerance.
bool newton_center(const std::vector<SdpBlock>& blocks, const Eigen::VectorXd& c,
                   double t, Eigen::VectorXd& x, int max_steps) {
  const int m = static_cast<int>(x.size());
  for (int step = 0; step < max_steps; ++step) {
    Eigen::VectorXd g = t * c;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
    for (const auto& blk : blocks) {
      Eigen::MatrixXd S = -sdp_block_value(blk, x);
      Eigen::LLT<Eigen::MatrixXd> llt(S);
      if (llt.info() != Eigen::Success) return false;
      Eigen::MatrixXd Sinv =
          llt.solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
      std::vector<Eigen::MatrixXd> G(blk.terms.size());
      for (size_t k = 0; k < blk.terms.size(); ++k) {
        G[k] = Sinv * blk.terms[k].second;
        g(blk.terms[k].first) += G[k].trace();
      }
      for (size_t k = 0; k < blk.terms.size(); ++k)
        for (size_t l = k; l < blk.terms.size(); ++l) {
          double hij = (G[k].array() * G[l].transpose().array()).sum();
          int ik = blk.terms[k].first, il = blk.terms[l].first;
          H(ik, il) += hij;
          if (ik != il) H(il, ik) += hij;
        }
    }
    H.diagonal().array() += 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd d = ldlt.solve(-g);
    double decrement = -g.dot(d);
    if (!std::isfinite(decrement) || decrement <= 0) return true;
    if (decrement < 1e-12) return true;
    // Backtracking line search keeping strict feasibility.
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd xn = x + alpha * d;
      if (strictly_feasible(blocks, xn)) {
        x = xn;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) return false;
  }
  return true;
}

double barrier_dimension(const std::vector<SdpBlock>& blocks) {
  double nu = 0.0;
  for (const auto& blk : blocks) nu += static_cast<double>(blk.F0.rows());
  return nu;
}

// Path following from a strictly feasible start.
void barrier_minimize(const std::vector<SdpBlock>& blocks, const Eigen::VectorXd& c,
                      Eigen::VectorXd& x, double gap_tol,
                      const std::function<bool(const Eigen::VectorXd&)>& early_stop) {
  double nu = barrier_dimension(blocks);
  double t = 1.0;
  for (int stage = 0; stage < 60; ++stage) {
    if (!newton_center(blocks, c, t, x, 80)) break;
    if (early_stop && early_stop(x)) return;
    if (nu / t < gap_tol) return;
    t *= 10.0;
  }
}

}  // namespace

SdpResult sdp_solve(const SdpProblem& prob) {
  const int m = prob.num_vars;
  for (const auto& blk : prob.blocks) {
    if (blk.F0.rows() != blk.F0.cols())
      throw NumericsError("sdp_solve: block not square");
    if (blk.F0.rows() > 64)
      throw NumericsError("sdp_solve: block larger than 64");
    for (const auto& [idx, Fi] : blk.terms)
      if (idx < 0 || idx >= m)
        throw NumericsError("sdp_solve: variable index out of range");
  }

  // Phase I: minimize s subject to F_b(x) - s I <= 0 and s >= -1.
  std::vector<SdpBlock> ph1 = prob.blocks;
  for (auto& blk : ph1) {
    Eigen::MatrixXd mI = -Eigen::MatrixXd::Identity(blk.F0.rows(), blk.F0.cols());
    blk.terms.emplace_back(m, mI);
  }
  {
    SdpBlock cap;  // -1 - s <= 0
    cap.F0 = Eigen::MatrixXd::Constant(1, 1, -1.0);
    cap.terms.emplace_back(m, Eigen::MatrixXd::Constant(1, 1, -1.0));
    ph1.push_back(cap);
  }
  Eigen::VectorXd x1 = Eigen::VectorXd::Zero(m + 1);
  double s0 = -0.5;
  for (const auto& blk : prob.blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sdp_block_value(blk, x1.head(m).eval()));
    s0 = std::max(s0, es.eigenvalues().maxCoeff());
  }
  x1(m) = s0 + 1.0;
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(m + 1);
  c1(m) = 1.0;
  barrier_minimize(ph1, c1, x1, 1e-10,
                   [&](const Eigen::VectorXd& v) { return v(v.size() - 1) < -1e-4; });

  if (x1(m) >= -1e-9) {
    SdpResult res;
    res.status = SdpStatus::Infeasible;
    res.x = x1.head(m);
    res.block_margins.reserve(prob.blocks.size());
    for (const auto& blk : prob.blocks) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sdp_block_value(blk, res.x));
      res.block_margins.push_back(es.eigenvalues().maxCoeff());
    }
    return res;
  }

  Eigen::VectorXd x = x1.head(m);
  if (prob.c.size() > 0) {
    if (prob.c.size() != m) throw NumericsError("sdp_solve: objective size mismatch");
    barrier_minimize(prob.blocks, prob.c, x, 1e-10, nullptr);
  }

  SdpResult res;
  res.x = x;
  res.objective = prob.c.size() ? prob.c.dot(x) : 0.0;
  bool feasible = true;
  for (const auto& blk : prob.blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sdp_block_value(blk, x));
    double mu = es.eigenvalues().maxCoeff();
    res.block_margins.push_back(mu);
    feasible = feasible && mu <= 0.0;
  }
  res.status = feasible ? SdpStatus::Optimal : SdpStatus::MaxIterations;
  return res;
}

// ---------------------------------------------------------------------------
// care_solve: stable Hamiltonian eigenspace
// ---------------------------------------------------------------------------

CareSolution care_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw NumericsError("care_solve: dimension mismatch");
  const int nu = static_cast<int>(B.cols());
  if (B.rows() != n || R.rows() != nu || R.cols() != nu)
    throw NumericsError("care_solve: dimension mismatch");

  Eigen::LLT<Eigen::MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success)
    throw NumericsError("care_solve: R not positive definite");
  Eigen::MatrixXd BRinvBt = B * rllt.solve(B.transpose());

  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -BRinvBt, -Q, -A.transpose();

  Eigen::ComplexEigenSolver<Eigen::MatrixXd> ces(H);
  if (ces.info() != Eigen::Success)
    throw NumericsError("care_solve: Hamiltonian eigensolver failed");

  Eigen::MatrixXcd X1(n, n), X2(n, n);
  int count = 0;
  for (int k = 0; k < 2 * n && count < n; ++k) {
    if (ces.eigenvalues()(k).real() < -1e-10) {
      X1.col(count) = ces.eigenvectors().col(k).head(n);
      X2.col(count) = ces.eigenvectors().col(k).tail(n);
      ++count;
    }
  }
  if (count != n)
    throw NumericsError("care_solve: no stabilizing solution (stable eigenspace "
                        "has dimension " + std::to_string(count) + ")");

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(X1);
  if (!lu.isInvertible())
    throw NumericsError("care_solve: stable eigenspace is not a graph over the state");
  Eigen::MatrixXcd Pc = X2 * lu.inverse();
  Eigen::MatrixXd P = Pc.real();
  P = 0.5 * (P + P.transpose()).eval();

  Eigen::MatrixXd K = rllt.solve(B.transpose() * P);
  Eigen::MatrixXd res_mat =
      A.transpose() * P + P * A - P * BRinvBt * P + Q;
  double scale = std::max({1.0, Q.norm(), (P * A).norm(), (P * BRinvBt * P).norm()});
  double residual = res_mat.norm() / scale;
  if (residual > 1e-8)
    throw NumericsError("care_solve: residual " + std::to_string(residual) +
                        " exceeds tolerance");

  // The returned P must be stabilizing.
  Eigen::EigenSolver<Eigen::MatrixXd> cls(A - B * K);
  if (cls.eigenvalues().real().maxCoeff() >= 0)
    throw NumericsError("care_solve: closed loop not stable");

  return {P, K, residual};
}

// ---------------------------------------------------------------------------
// compact_svd
// ---------------------------------------------------------------------------

CompactSvd compact_svd(const Eigen::MatrixXd& M, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  int k = 0;
  if (sv.size() > 0) {
    double cutoff = rel_tol * sv(0);
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > cutoff && sv(i) > 0.0) ++k;
  }
  CompactSvd out;
  out.U = svd.matrixU().leftCols(k);
  out.sigma = sv.head(k);
  out.V = svd.matrixV().leftCols(k);
  return out;
}

}  // namespace tlnmem::num
