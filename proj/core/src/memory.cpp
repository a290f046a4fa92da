#include "tlnmem/memory.hpp"

#include <algorithm>
#include <cmath>

namespace tlnmem {

namespace {

const std::vector<std::string>& gate_channel_names() {
  static const std::vector<std::string> names{"G", "gamma", "q", "T", "w"};
  return names;
}

Eigen::VectorXd gate_channel_values(const TriggerState& t) {
  Eigen::VectorXd v(5);
  v << t.G, t.gamma, t.q, t.T, t.w_gate;
  return v;
}

// Similarity used to drive the trigger; a zero-length or zero-norm readout
// counts as total mismatch rather than an error.
double guarded_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm(), nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return a.dot(b) / (na * nb);
}

Eigen::VectorXd unit_or_zero(Eigen::VectorXd v) {
  double n = v.norm();
  if (n >= 1e-12) v /= n;
  return v;
}

}  // namespace

MemoryModel make_model(int d, int n) {
  if (d <= 0 || n <= 0)
    throw std::invalid_argument("make_model: dimensions must be positive");
  MemoryModel m;
  m.W_E = Eigen::MatrixXd::Zero(d, n);
  m.W_D = Eigen::MatrixXd::Zero(n, d);
  return m;
}

double cosine_similarity(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double np = p.norm(), nq = q.norm();
  if (np < 1e-300 || nq < 1e-300)
    throw std::invalid_argument("cosine_similarity: zero-norm input");
  return p.dot(q) / (np * nq);
}

Eigen::VectorXd encode(const MemoryModel& model, const Eigen::VectorXd& P) {
  if (P.size() != model.W_E.rows())
    throw std::invalid_argument("encode: pattern dimension mismatch");
  return model.W_E.transpose() * P;
}

Eigen::VectorXd decode(const MemoryModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.W_D.rows())
    throw std::invalid_argument("decode: latent dimension mismatch");
  return model.W_D.transpose() * x;
}

void update_encoder(MemoryModel& model, const Eigen::VectorXd& P,
                    const Eigen::VectorXd& x_star, const SupportSet& support) {
  double p2 = P.squaredNorm();
  if (p2 <= 0.0) throw std::invalid_argument("update_encoder: zero pattern");
  std::vector<int> free;
  for (int i : support.indices)
    if (!model.frozen_rows.count(i)) free.push_back(i);
  if (free.empty())
    throw CapacityError("update_encoder: every coordinate of this support is already bound");
  for (int i : free) model.W_E.col(i - 1) = (x_star(i - 1) / p2) * P;
}

void update_decoder(MemoryModel& model, const Eigen::VectorXd& P,
                    const Eigen::VectorXd& x_star, const SupportSet& support) {
  std::vector<int> free;
  Eigen::VectorXd residual = P;
  double u2 = 0.0;
  for (int i : support.indices) {
    if (model.frozen_rows.count(i)) {
      residual -= x_star(i - 1) * model.W_D.row(i - 1).transpose();
    } else {
      free.push_back(i);
      u2 += x_star(i - 1) * x_star(i - 1);
    }
  }
  if (free.empty())
    throw CapacityError("update_decoder: every coordinate of this support is already bound");
  if (u2 <= 0.0)
    throw std::invalid_argument("update_decoder: free coordinates of x_star are zero");
  // Minimum-norm rows solving sum_i x*_i d_i = residual over the free i.
  for (int i : free) model.W_D.row(i - 1) = (x_star(i - 1) / u2) * residual.transpose();
}

LearnControlSource::LearnControlSource(const Network& net, const MemoryModel& model,
                                       Eigen::VectorXd pattern, const SessionConfig& cfg,
                                       SupportSet start_support)
    : net_(net),
      model_(model),
      pattern_(std::move(pattern)),
      cfg_(cfg),
      W_inh_(build_inhibition(start_support, cfg.control.c_inh, net.params.n)) {}

void LearnControlSource::reset(std::uint64_t seed) {
  trig_ = TriggerState{};
  ou_ = 0.0;
  rng_.seed(seed);
}

void LearnControlSource::advance(double /*t*/, double dt, const Eigen::VectorXd& x) {
  double s = guarded_similarity(decode(model_, x), pattern_);
  trig_ = trigger_step(trig_, s, cfg_.trigger, dt);
  ou_ = noise_step(ou_, cfg_.control.tau_ou, dt, rng_);
}

ControlInput LearnControlSource::eval(double /*t*/, const Eigen::VectorXd& x) const {
  ControlInput u;
  double gate = cfg_.control.r_gain * trig_.G;
  if (gate > 0.0) u.inside = gate * learning_input(x, W_inh_, ou_, cfg_.control);
  return u;
}

const std::vector<std::string>& LearnControlSource::aux_names() const {
  return gate_channel_names();
}

Eigen::VectorXd LearnControlSource::aux_values() const {
  return gate_channel_values(trig_);
}

InferControlSource::InferControlSource(const Network& net, const MemoryModel& model,
                                       Eigen::VectorXd presented,
                                       const SessionConfig& cfg)
    : net_(net),
      model_(model),
      presented_(unit_or_zero(std::move(presented))),
      x_tar_(encode(model, presented_)),
      cfg_(cfg),
      aux_(LqrAuxState::init(net.params.n, cfg.aux)) {}

void InferControlSource::reset(std::uint64_t /*seed*/) {
  trig_ = TriggerState{};
  aux_ = LqrAuxState::init(net_.params.n, cfg_.aux);
  parked_since_ = -1.0;
}

void InferControlSource::advance(double t, double dt, const Eigen::VectorXd& x) {
  double s = guarded_similarity(decode(model_, x), presented_);
  trig_ = trigger_step(trig_, s, cfg_.trigger, dt);
  if (s >= cfg_.trigger.s_th) {
    if (parked_since_ < 0.0) parked_since_ = t;
  } else {
    parked_since_ = -1.0;
  }
  // Gain design at unit gate; the live gate only scales the applied input.
  lqr_aux_step(aux_, net_, x_tar_, 1.0, cfg_.r_infer, dt);
}

ControlInput InferControlSource::eval(double /*t*/, const Eigen::VectorXd& x) const {
  ControlInput u;
  double gate = cfg_.r_infer * trig_.G;
  if (gate > 0.0) u.outside = gate * feedback_input(x, x_tar_, aux_.K);
  return u;
}

const std::vector<std::string>& InferControlSource::aux_names() const {
  return gate_channel_names();
}

Eigen::VectorXd InferControlSource::aux_values() const {
  return gate_channel_values(trig_);
}

namespace {

void capture(Trajectory* traj, const InputSource& src) {
  if (!traj) return;
  traj->aux_names = src.aux_names();
}

StepObserver recorder(Trajectory* traj) {
  if (!traj) return nullptr;
  return [traj](double t, const Eigen::VectorXd& x, const InputSource* s) {
    traj->times.push_back(t);
    traj->states.push_back(x);
    if (s) traj->aux.push_back(s->aux_values());
  };
}

}  // namespace

LearnReport learn_pattern(MemoryModel& model, const Network& net, const Pattern& p,
                          const SessionConfig& cfg, Trajectory* traj) {
  const int n = net.params.n;
  double norm = p.values.norm();
  if (norm <= 0.0) throw std::invalid_argument("learn_pattern: zero pattern");
  Eigen::VectorXd P = p.values / norm;

  LearnReport rep;
  for (const auto& entry : model.registry) {
    if (cosine_similarity(P, entry.pattern) >= cfg.trigger.s_th) {
      rep.already_known = true;
      rep.support = entry.support;
      return rep;
    }
  }
  int m = static_cast<int>(model.registry.size()) + 1;
  if (m > n - 1)
    throw CapacityError("learn_pattern: chain capacity (" + std::to_string(n - 1) +
                        " patterns) exhausted");

  auto bind = [&](const Equilibrium& eq) {
    update_encoder(model, P, eq.x, eq.support);
    update_decoder(model, P, eq.x, eq.support);
    for (int i : eq.support.indices) model.frozen_rows.insert(i);
    model.registry.push_back({p.id, P, eq.support, eq.x});
    rep.bound = true;
    rep.support = eq.support;
  };

  if (m == 1) {
    // Nothing stored yet: the latent state rests at the first attractor, so
    // the association is written without moving anything.
    bind(attractor_closed_form(net, 1));
    return rep;
  }

  auto target = attractor_closed_form(net, m);
  const SupportSet start_support = model.registry.back().support;
  const Eigen::VectorXd start_state = model.registry.back().attractor;

  for (int attempt = 0; attempt < cfg.retry_max; ++attempt) {
    LearnControlSource src(net, model, P, cfg, start_support);
    IntegratorConfig integ = cfg.integ;
    integ.rng_seed = cfg.integ.rng_seed + static_cast<std::uint64_t>(attempt);
    if (traj) {
      traj->times.clear();
      traj->states.clear();
      traj->aux.clear();
    }
    capture(traj, src);
    auto outcome = run_steps_until(
        net, start_state, &src, integ, recorder(traj),
        [&](double, const Eigen::VectorXd&, const InputSource*) {
          return src.pulse_done(cfg.g_off_threshold);
        });

    IntegratorConfig settle_cfg = cfg.integ;
    settle_cfg.t_max = cfg.settle_t_max;
    auto settled = settle(net, outcome.x, settle_cfg);
    rep.attempts = attempt + 1;
    if (settled.converged && settled.support == target.support) {
      bind(target);
      return rep;
    }
  }
  throw TransitionError("learn_pattern: transition to the next attractor failed after " +
                        std::to_string(cfg.retry_max) + " attempts");
}

InferenceResult infer_pattern(const MemoryModel& model, const Network& net,
                              const Pattern& noisy, const SessionConfig& cfg,
                              Trajectory* traj) {
  if (model.registry.empty())
    throw MemoryError("infer_pattern: nothing stored yet");
  if (noisy.values.size() != model.W_E.rows())
    throw std::invalid_argument("infer_pattern: pattern dimension mismatch");

  InferControlSource src(net, model, noisy.values, cfg);
  capture(traj, src);
  auto outcome = run_steps_until(
      net, model.registry.back().attractor, &src, cfg.integ, recorder(traj),
      [&](double t, const Eigen::VectorXd&, const InputSource*) {
        return src.pulse_done(cfg.g_off_threshold) || src.parked(t) ||
               src.never_fired(t);
      });

  IntegratorConfig settle_cfg = cfg.integ;
  settle_cfg.t_max = cfg.settle_t_max;
  auto settled = settle(net, outcome.x, settle_cfg);

  InferenceResult res;
  res.final_state = settled.final_state;
  res.matched_support = settled.support;
  res.converged = settled.converged;
  res.reconstructed = decode(model, settled.final_state);
  res.similarity = guarded_similarity(res.reconstructed, noisy.values);
  res.target = src.target();
  return res;
}

}  // namespace tlnmem
