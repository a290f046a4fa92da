#pragma once

#include <Eigen/Dense>

#include <random>

#include "tlnmem/cstln.hpp"

namespace tlnmem {

// Mismatch trigger.  A sigmoid of the similarity error charges a one-shot
// latch q; the pulse G opens while the latch charges and is shut again by a
// timer T crossing the duration H.  All scalars live in [0,1] except T.
struct TriggerState {
  double gamma = 0.0;
  double q = 0.0;
  double T = 0.0;
  double w_gate = 0.0;
  double G = 0.0;
};

struct TriggerConfig {
  // With threshold 0.9, a matching input (s = 1) must not open the gate.
  // The charge integral is bounded by tau_q, so the pulse ceiling is
  // 1 - exp(-tau_q/tau_r); tau_r well below tau_q makes the pulse saturate
  // near 1, and the sharpness keeps the leak at s = 1 below 1e-6 over a
  // session.  See the trigger tests for the measured shape.
  double m_gain = 200.0;
  double s_th = 0.9;
  double tau_q = 2.0;
  double tau_r = 0.3;
  double tau_d = 5.0;
  double beta_gate = 50.0;
  double H = 15.0;
};

TriggerState trigger_step(const TriggerState& state, double s,
                          const TriggerConfig& cfg, double dt);

// Knobs of the transition (learning) controller.
struct LearnControlConfig {
  double c_inh = 2.0;
  double r_gain = 1.0;
  double kappa = 1.0;
  double tau_ou = 1.0;
  double kernel_decay = 1.0;
};

// Mutual inhibition restricted to the currently active pair.
Eigen::MatrixXd build_inhibition(const SupportSet& current_support, double c_inh,
                                 int n);

// One Euler-Maruyama step of the exploration noise state; unit stationary
// variance.
double noise_step(double a, double tau, double dt, std::mt19937_64& rng);

// Spatial noise profile: peak on the active set, exponential decay above it,
// zero strictly below it so exploration pushes toward higher indices.
Eigen::VectorXd forward_kernel(const SupportSet& support, double decay, int n);

// u = W_inh x + kappa tanh(a) k(x).  The caller scales by the gate r G(t)
// and injects inside the rectifier.
Eigen::VectorXd learning_input(const Eigen::VectorXd& x, const Eigen::MatrixXd& W_inh,
                               double a, const LearnControlConfig& cfg,
                               double support_tol = 1e-4);

struct LinearizedSystem {
  Eigen::MatrixXd A;  // -I + D W
  Eigen::MatrixXd D;  // active-coordinate indicator
};

LinearizedSystem linearize(const Network& net, const Eigen::VectorXd& x_tar);

struct LqrAuxConfig {
  double h_on = 0.05;
  double alpha_d = 50.0;
  double beta_d = 50.0;
  double tau_d = 0.01;
  double tau_a = 0.01;
  // The value flow sees the closed-loop rate 2|A - BK|, about 40 at the
  // default feedback strength, so forward-Euler needs tau_p well above
  // 2 * dt * 40.  The gain flow is slowed to match, which also keeps the
  // early gain ramp from overshooting while P is still settling.
  double tau_p = 0.05;
  double tau_k = 0.1;
  // Empty matrices mean identity weights.
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

// Continuously estimated LQR pieces: activity indicator D, plant estimate A,
// value matrix P_ric, gain K.  Run to the flow's fixed point these coincide
// with the algebraic Riccati solution for the linearization at x_tar.
struct LqrAuxState {
  Eigen::MatrixXd D;
  Eigen::MatrixXd A;
  Eigen::MatrixXd P_ric;
  Eigen::MatrixXd K;
  LqrAuxConfig config;

  static LqrAuxState init(int n, LqrAuxConfig cfg = {});
};

void lqr_aux_step(LqrAuxState& state, const Network& net, const Eigen::VectorXd& x_tar,
                  double G, double r_gain, double dt);

// u_fb = -K (x - x_tar); scaled by r G(t) and injected outside the rectifier
// by the caller.
Eigen::VectorXd feedback_input(const Eigen::VectorXd& x, const Eigen::VectorXd& x_tar,
                               const Eigen::MatrixXd& K);

}  // namespace tlnmem
