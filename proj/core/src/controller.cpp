#include "tlnmem/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tlnmem/dynamics.hpp"

namespace tlnmem {

namespace {

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

TriggerState trigger_step(const TriggerState& state, double s,
                          const TriggerConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("trigger_step: dt must be positive");

  TriggerState next;
  next.gamma = sigmoid(cfg.m_gain * (cfg.s_th - s));
  next.w_gate = sigmoid(cfg.beta_gate * (state.T - cfg.H));

  double charge = next.gamma * (1.0 - state.q);
  next.q = clamp01(state.q + dt * charge / cfg.tau_q);
  next.T = state.T + dt * state.q;
  next.G = clamp01(state.G + dt * ((1.0 - state.G) * charge / cfg.tau_r -
                                   state.G * next.w_gate / cfg.tau_d));
  return next;
}

Eigen::MatrixXd build_inhibition(const SupportSet& current_support, double c_inh,
                                 int n) {
  if (current_support.size() != 2)
    throw std::invalid_argument("build_inhibition: expected exactly two active units");
  if (c_inh < 0.0)
    throw std::invalid_argument("build_inhibition: c_inh must be nonnegative");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  int a = current_support.indices[0] - 1;
  int b = current_support.indices[1] - 1;
  M(a, b) = -c_inh;
  M(b, a) = -c_inh;
  return M;
}

double noise_step(double a, double tau, double dt, std::mt19937_64& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("noise_step: tau must be positive");
  std::normal_distribution<double> xi(0.0, 1.0);
  return a - (a / tau) * dt + std::sqrt(2.0 / tau) * std::sqrt(dt) * xi(rng);
}

Eigen::VectorXd forward_kernel(const SupportSet& support, double decay, int n) {
  Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
  if (support.indices.empty()) return k;
  int lowest = support.indices.front();
  for (int j = 1; j <= n; ++j) {
    if (j < lowest) continue;  // no backward push
    int dist = n;
    for (int s : support.indices) dist = std::min(dist, std::abs(j - s));
    k(j - 1) = std::exp(-decay * static_cast<double>(dist));
  }
  return k;
}

Eigen::VectorXd learning_input(const Eigen::VectorXd& x, const Eigen::MatrixXd& W_inh,
                               double a, const LearnControlConfig& cfg,
                               double support_tol) {
  Eigen::VectorXd u = W_inh * x;
  SupportSet active = support_of(x, support_tol);
  if (!active.indices.empty())
    u += cfg.kappa * std::tanh(a) *
         forward_kernel(active, cfg.kernel_decay, static_cast<int>(x.size()));
  return u;
}

LinearizedSystem linearize(const Network& net, const Eigen::VectorXd& x_tar) {
  const int n = net.params.n;
  if (x_tar.size() != n)
    throw std::invalid_argument("linearize: x_tar dimension does not match the network");
  Eigen::VectorXd h = net.W * x_tar + net.theta;
  LinearizedSystem sys;
  sys.D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) sys.D(i, i) = h(i) > 0.0 ? 1.0 : 0.0;
  sys.A = -Eigen::MatrixXd::Identity(n, n) + sys.D * net.W;
  return sys;
}

LqrAuxState LqrAuxState::init(int n, LqrAuxConfig cfg) {
  if (cfg.Q.size() == 0) cfg.Q = Eigen::MatrixXd::Identity(n, n);
  if (cfg.R.size() == 0) cfg.R = Eigen::MatrixXd::Identity(n, n);
  LqrAuxState st;
  st.D = Eigen::MatrixXd::Zero(n, n);
  st.A = -Eigen::MatrixXd::Identity(n, n);
  st.P_ric = cfg.Q;
  st.K = Eigen::MatrixXd::Zero(n, n);
  st.config = std::move(cfg);
  return st;
}

void lqr_aux_step(LqrAuxState& state, const Network& net, const Eigen::VectorXd& x_tar,
                  double G, double r_gain, double dt) {
  const int n = net.params.n;
  const LqrAuxConfig& c = state.config;

  Eigen::VectorXd h = net.W * x_tar + net.theta;
  Eigen::VectorXd g_on = (h.array() - c.h_on).cwiseMax(0.0);
  Eigen::VectorXd g_off = (-h.array()).cwiseMax(0.0);

  // Indicator flow; rates are deliberately stiff, so the clip to [0,1] is
  // what actually pins the diagonal to its rail.
  Eigen::VectorXd d = state.D.diagonal();
  Eigen::VectorXd dd = ((c.alpha_d * (1.0 - d.array()) * g_on.array() -
                         c.beta_d * d.array() * g_off.array()) /
                        c.tau_d)
                           .matrix();
  d += dt * dd;
  state.D = d.cwiseMax(0.0).cwiseMin(1.0).asDiagonal();

  Eigen::MatrixXd A_target = state.D * net.W - Eigen::MatrixXd::Identity(n, n);
  state.A += (dt / c.tau_a) * (A_target - state.A);

  Eigen::MatrixXd B = (r_gain * G) * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd A_cl = state.A - B * state.K;
  Eigen::MatrixXd ric = A_cl.transpose() * state.P_ric + state.P_ric * A_cl + c.Q +
                        state.K.transpose() * c.R * state.K;
  state.P_ric += (dt / c.tau_p) * ric;
  state.P_ric = 0.5 * (state.P_ric + state.P_ric.transpose()).eval();

  state.K += (dt / c.tau_k) * (B.transpose() * state.P_ric - c.R * state.K);

  if (!state.P_ric.allFinite() || !state.K.allFinite() || !state.A.allFinite())
    throw DivergenceError(
        "lqr_aux_step: auxiliary flow diverged (reduce dt or relax the time constants)",
        0.0, x_tar);
}

Eigen::VectorXd feedback_input(const Eigen::VectorXd& x, const Eigen::VectorXd& x_tar,
                               const Eigen::MatrixXd& K) {
  if (!K.allFinite()) throw std::invalid_argument("feedback_input: gain must be finite");
  return -K * (x - x_tar);
}

}  // namespace tlnmem
