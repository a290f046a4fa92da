#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlnmem/cstln.hpp"

namespace tlnmem {

struct IntegratorConfig {
  double dt = 1e-3;
  double t_max = 100.0;
  // Settling is declared once the vector-field sup norm stays below
  // settle_tol for settle_window consecutive steps.
  double settle_tol = 1e-8;
  int settle_window = 100;
  std::uint64_t rng_seed = 0;
};

// Control input split by injection site: `inside` is added to the
// preactivation before the rectifier, `outside` is added to dx/dt directly.
// A zero-length vector stands for "no injection at this site".
struct ControlInput {
  Eigen::VectorXd inside;
  Eigen::VectorXd outside;
};

// A stateful input generator driven in lockstep with the network.  advance()
// is called once per step with the state at the step start and performs the
// generator's own (Euler or Euler-Maruyama) update; eval() must then be a
// pure function of (t, x) and the frozen internal state, because the RK4
// stages call it several times per step.
class InputSource {
 public:
  virtual ~InputSource() = default;

  virtual void reset(std::uint64_t /*seed*/) {}
  virtual void advance(double /*t*/, double /*dt*/, const Eigen::VectorXd& /*x*/) {}
  virtual ControlInput eval(double t, const Eigen::VectorXd& x) const = 0;

  // Named diagnostic channels recorded into Trajectory.aux each step.
  virtual const std::vector<std::string>& aux_names() const;
  virtual Eigen::VectorXd aux_values() const { return Eigen::VectorXd(); }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<std::string> aux_names;
  std::vector<Eigen::VectorXd> aux;  // one row per sample, aligned with aux_names
};

struct SettleResult {
  Eigen::VectorXd final_state;
  SupportSet support;
  bool converged = false;
  double elapsed = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string what, double t, Eigen::VectorXd last_finite)
      : std::runtime_error(std::move(what)),
        time(t),
        last_finite_state(std::move(last_finite)) {}

  double time;
  Eigen::VectorXd last_finite_state;
};

// Right-hand side at one point, with the input source's current internal
// state held fixed.
Eigen::VectorXd vector_field(const Network& net, double t, const Eigen::VectorXd& x,
                             const InputSource* src);

// Fixed-step RK4 run that hands every sample (including the initial one) to
// `observe`.  The memory/inference sessions use this directly to avoid
// storing full trajectories.
using StepObserver =
    std::function<void(double t, const Eigen::VectorXd& x, const InputSource* src)>;
Eigen::VectorXd run_steps(const Network& net, const Eigen::VectorXd& x0,
                          InputSource* src, const IntegratorConfig& cfg,
                          const StepObserver& observe);

// Same loop with an optional stop test, checked after each step.  Returns
// the state where the run ended and whether the stop test fired before
// t_max.
struct RunOutcome {
  Eigen::VectorXd x;
  double t = 0.0;
  bool stopped = false;
};
using StopPredicate =
    std::function<bool(double t, const Eigen::VectorXd& x, const InputSource* src)>;
RunOutcome run_steps_until(const Network& net, const Eigen::VectorXd& x0,
                           InputSource* src, const IntegratorConfig& cfg,
                           const StepObserver& observe, const StopPredicate& stop);

Trajectory integrate(const Network& net, const Eigen::VectorXd& x0, InputSource* src,
                     const IntegratorConfig& cfg);

// Autonomous run (u = 0) that stops early once the state stops moving.
SettleResult settle(const Network& net, const Eigen::VectorXd& x0,
                    const IntegratorConfig& cfg);

// V(x) = 1/2 x'(I - W)x - theta'x, nonincreasing along trajectories in the
// region where the closed-form analysis applies.
double energy(const Network& net, const Eigen::VectorXd& x);

struct Polytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;  // region {x : Ax <= b}
};

struct InvarianceReport {
  bool region_empty = false;
  bool entered = false;
  double entry_time = 0.0;
  double max_violation = 0.0;  // over samples after first entry
};

InvarianceReport check_polytope_invariance(const Polytope& poly, const Trajectory& traj);

}  // namespace tlnmem
