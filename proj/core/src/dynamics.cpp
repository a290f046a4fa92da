#include "tlnmem/dynamics.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "tlnmem/numerics.hpp"

namespace tlnmem {

const std::vector<std::string>& InputSource::aux_names() const {
  static const std::vector<std::string> none;
  return none;
}

Eigen::VectorXd vector_field(const Network& net, double t, const Eigen::VectorXd& x,
                             const InputSource* src) {
  Eigen::VectorXd pre = net.W * x + net.theta;
  if (src) {
    ControlInput u = src->eval(t, x);
    if (u.inside.size() > 0) pre += u.inside;
    Eigen::VectorXd dx = -x + pre.cwiseMax(0.0);
    if (u.outside.size() > 0) dx += u.outside;
    return dx;
  }
  return -x + pre.cwiseMax(0.0);
}

namespace {

void validate(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0) || !(cfg.settle_tol > 0.0))
    throw std::invalid_argument("integrator config: dt, t_max, settle_tol must be positive");
}

void rk4_step(const Network& net, double t, double dt, Eigen::VectorXd& x,
              const InputSource* src) {
  Eigen::VectorXd k1 = vector_field(net, t, x, src);
  Eigen::VectorXd k2 = vector_field(net, t + 0.5 * dt, x + 0.5 * dt * k1, src);
  Eigen::VectorXd k3 = vector_field(net, t + 0.5 * dt, x + 0.5 * dt * k2, src);
  Eigen::VectorXd k4 = vector_field(net, t + dt, x + dt * k3, src);
  x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

RunOutcome run_steps_until(const Network& net, const Eigen::VectorXd& x0,
                           InputSource* src, const IntegratorConfig& cfg,
                           const StepObserver& observe, const StopPredicate& stop) {
  validate(cfg);
  if (x0.size() != net.params.n)
    throw std::invalid_argument("run_steps: x0 dimension does not match the network");
  if (x0.minCoeff() < 0.0)
    std::cerr << "run_steps: initial state has negative components; "
                 "they decay but start outside the usual operating range\n";

  if (src) src->reset(cfg.rng_seed);

  RunOutcome out;
  Eigen::VectorXd x = x0;
  double t = 0.0;
  if (observe) observe(t, x, src);

  const long nsteps = static_cast<long>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  for (long k = 0; k < nsteps; ++k) {
    if (src) src->advance(t, cfg.dt, x);
    Eigen::VectorXd before = x;
    rk4_step(net, t, cfg.dt, x, src);
    t = cfg.dt * static_cast<double>(k + 1);
    if (!x.allFinite())
      throw DivergenceError("state diverged at t = " + std::to_string(t), t,
                            std::move(before));
    if (observe) observe(t, x, src);
    if (stop && stop(t, x, src)) {
      out.stopped = true;
      break;
    }
  }
  out.x = std::move(x);
  out.t = t;
  return out;
}

Eigen::VectorXd run_steps(const Network& net, const Eigen::VectorXd& x0,
                          InputSource* src, const IntegratorConfig& cfg,
                          const StepObserver& observe) {
  return run_steps_until(net, x0, src, cfg, observe, nullptr).x;
}

Trajectory integrate(const Network& net, const Eigen::VectorXd& x0, InputSource* src,
                     const IntegratorConfig& cfg) {
  validate(cfg);
  Trajectory traj;
  if (src) traj.aux_names = src->aux_names();
  const long expected = static_cast<long>(std::ceil(cfg.t_max / cfg.dt)) + 1;
  traj.times.reserve(expected);
  traj.states.reserve(expected);
  if (!traj.aux_names.empty()) traj.aux.reserve(expected);

  run_steps(net, x0, src, cfg,
            [&](double t, const Eigen::VectorXd& x, const InputSource* s) {
              traj.times.push_back(t);
              traj.states.push_back(x);
              if (s && !traj.aux_names.empty()) traj.aux.push_back(s->aux_values());
            });
  return traj;
}

SettleResult settle(const Network& net, const Eigen::VectorXd& x0,
                    const IntegratorConfig& cfg) {
  validate(cfg);
  if (x0.size() != net.params.n)
    throw std::invalid_argument("settle: x0 dimension does not match the network");

  SettleResult res;
  Eigen::VectorXd x = x0;
  double t = 0.0;
  int quiet = 0;
  const long nsteps = static_cast<long>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  for (long k = 0; k < nsteps; ++k) {
    rk4_step(net, t, cfg.dt, x, nullptr);
    t = cfg.dt * static_cast<double>(k + 1);
    if (!x.allFinite())
      throw DivergenceError("state diverged at t = " + std::to_string(t), t, x0);
    double speed = vector_field(net, t, x, nullptr).lpNorm<Eigen::Infinity>();
    quiet = (speed < cfg.settle_tol) ? quiet + 1 : 0;
    if (quiet >= cfg.settle_window) {
      res.converged = true;
      break;
    }
  }
  res.final_state = x;
  res.support = support_of(x, 10.0 * cfg.settle_tol);
  res.elapsed = t;
  return res;
}

double energy(const Network& net, const Eigen::VectorXd& x) {
  const int n = net.params.n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - net.W;
  return 0.5 * x.dot(M * x) - net.theta.dot(x);
}

InvarianceReport check_polytope_invariance(const Polytope& poly, const Trajectory& traj) {
  InvarianceReport rep;
  const auto rows = poly.A.rows();
  if (rows == 0 || poly.b.size() != rows) {
    rep.region_empty = true;
    return rep;
  }

  // Feasibility probe: is {x : Ax <= b} even nonempty?
  num::LpProblem feas;
  feas.c = Eigen::VectorXd::Zero(poly.A.cols());
  feas.A = poly.A;
  feas.b = poly.b;
  const double inf = std::numeric_limits<double>::infinity();
  feas.lo = Eigen::VectorXd::Constant(poly.A.cols(), -inf);
  feas.hi = Eigen::VectorXd::Constant(poly.A.cols(), inf);
  if (num::lp_solve(feas).status == num::LpStatus::Infeasible) {
    rep.region_empty = true;
    return rep;
  }

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    double worst = (poly.A * traj.states[k] - poly.b).maxCoeff();
    if (!rep.entered) {
      if (worst <= 0.0) {
        rep.entered = true;
        rep.entry_time = traj.times[k];
        rep.max_violation = worst;
      }
    } else {
      rep.max_violation = std::max(rep.max_violation, worst);
    }
  }
  return rep;
}

}  // namespace tlnmem
