#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "tlnmem/cstln.hpp"
#include "tlnmem/dynamics.hpp"
#include "tlnmem/memory.hpp"

// Robustness certificates for stored attractors.  Two independent routes:
// an ellipsoidal basin estimate from local sector bounds on the rectifier
// (semidefinite program), and a polyhedral forward-invariant estimate split
// by the invariant hyperplane between neighbouring attractors (linear
// program).  Both report a noise radius in pattern space: presentations
// within that distance of the stored pattern are guaranteed to retrieve it.

namespace tlnmem {

class CertificationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dynamics rewritten about an equilibrium x*: with z = x - x* the flow is
// z' = -z + phi(Wz), where phi acts coordinatewise through the rectifier
// offset by the equilibrium preactivation y* = Wx* + theta.
struct ShiftedSystem {
  CstlnParams params;
  Eigen::MatrixXd W;
  Eigen::VectorXd x_star;
  Eigen::VectorXd y_star;
};

// Requires x_star to be an equilibrium of the flow (field norm below tol).
ShiftedSystem shift_about(const Network& net, const Eigen::VectorXd& x_star,
                          double tol = 1e-8);

// phi(u) = [u + y*]_+ - [y*]_+, applied to u = Wz.
Eigen::VectorXd shifted_nonlinearity(const ShiftedSystem& sys, const Eigen::VectorXd& u);
Eigen::VectorXd shifted_field(const ShiftedSystem& sys, const Eigen::VectorXd& z);

// Componentwise preactivation range and rectifier chord slopes over the
// ellipsoidal domain { z : z'Ez <= alpha^2 }.
struct SectorBounds {
  Eigen::VectorXd v_lo, v_hi;        // absolute preactivation interval ends
  Eigen::VectorXd s_alpha, s_beta;   // chord slope range, within [0, 1]
};

// v_i ranges over y*_i +- alpha * sqrt(w_i' E^-1 w_i), w_i' the i-th row of W.
std::pair<Eigen::VectorXd, Eigen::VectorXd> preactivation_interval(
    const ShiftedSystem& sys, const Eigen::MatrixXd& E, double alpha);

// Chord slopes of [v]_+ - [y*]_+ about the point (y*, 0) over [v_lo, v_hi].
std::pair<Eigen::VectorXd, Eigen::VectorXd> local_slopes(const ShiftedSystem& sys,
                                                         const Eigen::VectorXd& v_lo,
                                                         const Eigen::VectorXd& v_hi);

SectorBounds sector_bounds(const ShiftedSystem& sys, const Eigen::MatrixXd& E,
                           double alpha);

// Quadratic form in (z, phi) that is nonnegative whenever phi lies in the
// local sector: M = [W 0; 0 I]' Psi' M(lambda) Psi [W 0; 0 I] with
// Psi = [diag(s_beta) -I; -diag(s_alpha) I] and M(lambda) off-diagonal.
Eigen::MatrixXd build_qc(const Eigen::VectorXd& s_alpha, const Eigen::VectorXd& s_beta,
                         const Eigen::VectorXd& lambda, const Eigen::MatrixXd& W);

struct SdpCertificate {
  Eigen::MatrixXd P_lyap;   // basin estimate { z : z'Pz <= 1 }, P positive definite
  Eigen::VectorXd lambda;   // sector multipliers
  Eigen::MatrixXd E;        // sector domain shape
  double alpha = 0.0;       // sector domain radius
  double t = 0.0;           // encoder-image curvature bound, r = 1/sqrt(t)
  double r = 0.0;           // certified pattern-space noise radius
  SectorBounds bounds;      // sector data the multipliers were checked against
  // Re-verified top eigenvalues of the three matrix inequalities
  // (decrease, domain nesting, radius); all must be strictly negative.
  Eigen::Vector3d margins{0.0, 0.0, 0.0};
};

struct SdpSearchConfig {
  double alpha_min = 1e-3;
  double alpha_max = 0.0;   // nonpositive selects 2c
  int grid_points = 24;
  double eps_lmi = 1e-6;    // strictness margin on the decrease inequality
  double eps_nest = 1e-6;   // strictness margin on domain nesting
  double margin_tol = -1e-9;  // re-verification threshold for all margins
};

struct SdpSearchOutcome {
  // Best certificate over the alpha grid (largest radius), if any point
  // both solved and re-verified.
  std::optional<SdpCertificate> certificate;
  int feasible_points = 0;   // grid points with a verified certificate
  int infeasible_points = 0; // cleanly infeasible grid points
  int solver_failures = 0;   // non-converged solves or failed re-verification
};

// Grid search over the domain radius: at each alpha, minimize the worst
// curvature of the basin estimate over the encoder image subject to the
// decrease and nesting inequalities, then keep the best verified radius.
SdpSearchOutcome certify_sdp(const ShiftedSystem& sys, const MemoryModel& model,
                             const SdpSearchConfig& cfg = {});

// Level-set parameters (alpha on the centre coordinate, beta on its two
// neighbours) under which the band around a consecutive triple of
// coordinates is forward invariant.  The feasible (alpha, beta) region is a
// polygon cut out by three inequalities; it is nonempty only for
// sufficiently strong cross-inhibition.
struct FiFeasibility {
  bool feasible = false;
  double alpha_min = 0.0;   // c / (1 + delta)
  double alpha_max = 0.0;   // largest feasible alpha (0 when infeasible)
  Eigen::MatrixXd A;        // 3 x 2 rows over (alpha, beta)
  Eigen::VectorXd b;
};

FiFeasibility fi_parameters(const CstlnParams& params);

// Forward-invariant band about the triple {center-1, center, center+1}:
// centre preactivation at least alpha, neighbours at most beta, all other
// coordinates silent.  Rows are expressed over x directly.
struct FiSet {
  int center = 0;
  double alpha = 0.0;
  double beta = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

FiSet build_fi_set(const Network& net, int center, double alpha, double beta);

// Normal of the invariant hyperplane through the saddle between the
// attractors on {i-1, i} and {i, i+1}: +1 and -1 on the outer pair, zero on
// the shared coordinate, +-(eps+delta)/(1+delta) two steps out.  Positive on
// the left attractor of the pair.
Eigen::VectorXd separating_normal(const Network& net, int i);

struct RoaPolyhedron {
  int attractor_index = 0;   // certified pair starts at this coordinate
  bool left_of_saddle = false;  // true: half-space w'x >= 0, else w'x <= 0
  Eigen::VectorXd w;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

Polytope as_polytope(const RoaPolyhedron& poly);

// Split the invariant band at the hyperplane: each half contains exactly one
// of the two attractors and inner-approximates its basin.
std::pair<RoaPolyhedron, RoaPolyhedron> roa_polyhedra(const Network& net,
                                                      const FiSet& fi);

struct LpOptions {
  bool joint = true;        // optimize the level parameters per side
  bool report_max = false;  // report max of the side radii instead of min
  // Fixed levels for joint = false; negative alpha picks the midpoint of
  // the feasible alpha range with the smallest admissible beta.
  double alpha = -1.0;
  double beta = -1.0;
};

struct SideCertificate {
  bool exists = false;          // chain-boundary attractors lack one side
  double r = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool target_outside = false;  // encoded target violates the polyhedron
  Eigen::VectorXd row_ratios;   // per-row slack over encoder-image row norm
};

struct LpCertificate {
  int pattern_index = 0;
  SideCertificate toward_previous;  // guards the boundary shared with pair m-1
  SideCertificate toward_next;      // guards the boundary shared with pair m+1
  double r = 0.0;
};

// Pattern-space radius around stored pattern m within which the encoded
// presentation stays inside the attractor's polyhedral basin estimate(s).
LpCertificate certify_lp(const Network& net, const MemoryModel& model, int pattern_m,
                         const LpOptions& opts = {});

struct ValidationReport {
  int trials = 0;
  int successes = 0;
  double accuracy = 0.0;
};

// Empirical soundness probe: presentations at distance rho * radius from the
// stored pattern (uniform on the sphere), full inference each time.
ValidationReport validate_certificate(const Network& net, const MemoryModel& model,
                                      int pattern_m, double radius, double rho,
                                      int trials, std::uint64_t seed,
                                      const SessionConfig& session);

}  // namespace tlnmem
