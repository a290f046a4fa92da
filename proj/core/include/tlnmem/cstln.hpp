#pragma once

// Chain-structured threshold-linear network: symmetric weight matrix with
// zero diagonal, nearest-neighbor entries -1+eps and longer-range entries
// -1-delta, constant drive theta = c. The dynamics x' = -x + [Wx + theta]_+
// organize the nonnegative orthant into cells indexed by the set of active
// preactivations; this header provides the network builder, the closed-form
// equilibria (stable pair states and one-positive-eigenvalue triple states),
// general in-cell equilibrium solving, and cell Jacobians.
//
// Unit indices are 1-based in this API.

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tlnmem {

struct CstlnError : std::invalid_argument {
  explicit CstlnError(const std::string& what) : std::invalid_argument(what) {}
};

struct CstlnParams {
  int n = 0;
  double epsilon = 0.0;  // in (0, 1)
  double delta = 0.0;    // > 0
  double c = 0.0;        // > 0
};

struct Network {
  CstlnParams params;
  Eigen::MatrixXd W;
  Eigen::VectorXd theta;
};

// Sorted set of 1-based unit indices.
struct SupportSet {
  std::vector<int> indices;

  SupportSet() = default;
  SupportSet(std::initializer_list<int> idx);
  explicit SupportSet(std::vector<int> idx);

  bool contains(int i) const;
  int size() const { return static_cast<int>(indices.size()); }
  bool operator==(const SupportSet& other) const { return indices == other.indices; }
  std::string to_string() const;
};

// Extracts the support of a state: coordinates strictly above threshold.
SupportSet support_of(const Eigen::VectorXd& x, double threshold);

enum class EquilibriumKind { Attractor, Saddle, Other };

struct Equilibrium {
  Eigen::VectorXd x;
  SupportSet support;
  EquilibriumKind kind = EquilibriumKind::Other;
  std::vector<std::complex<double>> eigenvalues;  // in-cell Jacobian spectrum
  // Smallest strict-inequality slack of the cell conditions: positive iff the
  // point satisfies them strictly (min of on-support drives and negated
  // off-support drives).
  double cell_margin = 0.0;
};

struct CellJacobian {
  Eigen::MatrixXd J;  // -I + D_sigma W, rows zeroed off support
  std::vector<std::complex<double>> eigenvalues;
  EquilibriumKind kind = EquilibriumKind::Other;
};

// Validates parameter ranges (n >= 2, eps in (0,1), delta > 0, c > 0) and
// assembles W and theta.
Network build_network(const CstlnParams& params);

// Preactivation y = Wx + theta.
Eigen::VectorXd drive(const Network& net, const Eigen::VectorXd& x);

// Stable pair equilibrium on {i, i+1}, defined for i in [1, n-1]:
// both active coordinates equal c/(2 - eps). Spectrum: {-2+eps, -eps} on
// support and -1 off support.
Equilibrium attractor_closed_form(const Network& net, int i);

// Index-i-centered triple equilibrium on {i-1, i, i+1}, i in [2, n-1], with
// shoulder value c*eps/Delta and center value c*(delta + 2 eps)/Delta where
// Delta = delta + 4 eps - 2 eps^2. Exactly one positive eigenvalue (delta).
Equilibrium saddle_closed_form(const Network& net, int i);

// Solves for the fixed point with the given support and returns it when it
// satisfies the strict cell conditions; nullopt otherwise. Throws CstlnError
// when I - W restricted to the support is singular.
std::optional<Equilibrium> equilibrium_in_cell(const Network& net,
                                               const SupportSet& support);

// Jacobian of the dynamics inside the cell with the given active set, plus
// its spectrum and stability classification. A point is classified Saddle
// only when hyperbolic with exactly one unstable direction.
CellJacobian cell_jacobian(const Network& net, const SupportSet& support);

}  // namespace tlnmem
