#pragma once

// Dense numerical kernels used by the rest of the library: symmetric
// eigendecomposition, a small-scale LP solver, a log-barrier SDP solver,
// a continuous-time algebraic Riccati solver, and compact SVD.
// Everything is double precision and sized for desk-scale problems
// (a few dozen variables, blocks up to 64x64).

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tlnmem::num {

struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};

// Requires M symmetric to 1e-12 (relative); throws NumericsError otherwise.
SymEig sym_eig(const Eigen::MatrixXd& M);

// ---------------------------------------------------------------------------
// Linear programming
// ---------------------------------------------------------------------------
//
// maximize   c'x
// subject to A x <= b,  lo <= x <= hi
//
// Bounds may be -inf/+inf. Solved with a two-phase dense simplex using
// Bland's rule (lowest-index tie breaking), which cannot cycle. Intended
// for problems of at most ~100 variables.

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpProblem {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd lo;  // empty means all zero
  Eigen::VectorXd hi;  // empty means all +inf
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

LpResult lp_solve(const LpProblem& prob);

// ---------------------------------------------------------------------------
// Semidefinite programming
// ---------------------------------------------------------------------------
//
// minimize   c'x
// subject to F0_b + sum_i x_i Fi_b  <=  0   (negative semidefinite, per block)
//
// Solved by a standard log-det barrier interior point with Newton steps and
// a phase-I strict feasibility search. Block sizes up to 64. Margins of the
// returned point are re-verified with an eigensolver and reported.

struct SdpBlock {
  // F(x) = F0 + sum_k terms[k].second * x[terms[k].first]
  Eigen::MatrixXd F0;
  std::vector<std::pair<int, Eigen::MatrixXd>> terms;
};

enum class SdpStatus { Optimal, Infeasible, MaxIterations };

struct SdpProblem {
  int num_vars = 0;
  Eigen::VectorXd c;  // empty means pure feasibility
  std::vector<SdpBlock> blocks;
};

struct SdpResult {
  SdpStatus status = SdpStatus::MaxIterations;
  Eigen::VectorXd x;
  double objective = 0.0;
  // lambda_max of each block at the returned point; all negative iff the
  // point is strictly feasible.
  std::vector<double> block_margins;
};

SdpResult sdp_solve(const SdpProblem& prob);

// ---------------------------------------------------------------------------
// Continuous-time algebraic Riccati equation
// ---------------------------------------------------------------------------
//
// Solves A'P + PA - P B R^-1 B' P + Q = 0 for the stabilizing P via the
// stable eigenspace of the Hamiltonian matrix. Returns P and the gain
// K = R^-1 B' P. Throws NumericsError when no stabilizing solution exists
// or the residual exceeds 1e-8 (relative to the term magnitudes).

struct CareSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  double residual = 0.0;
};

CareSolution care_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

// ---------------------------------------------------------------------------
// Compact SVD
// ---------------------------------------------------------------------------

struct CompactSvd {
  Eigen::MatrixXd U;       // m x k, orthonormal columns
  Eigen::VectorXd sigma;   // k positive singular values, descending
  Eigen::MatrixXd V;       // n x k, orthonormal columns
};

// Singular values below rel_tol * sigma_max are treated as zero and dropped.
CompactSvd compact_svd(const Eigen::MatrixXd& M, double rel_tol = 1e-12);

}  // namespace tlnmem::num
