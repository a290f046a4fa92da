#pragma once

#include <Eigen/Dense>

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tlnmem/controller.hpp"
#include "tlnmem/cstln.hpp"
#include "tlnmem/dynamics.hpp"

namespace tlnmem {

class MemoryError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class CapacityError : public MemoryError {
  using MemoryError::MemoryError;
};
class TransitionError : public MemoryError {
  using MemoryError::MemoryError;
};

struct Pattern {
  Eigen::VectorXd values;
  std::string id;
};

struct RegistryEntry {
  std::string pattern_id;
  Eigen::VectorXd pattern;    // clean, unit norm
  SupportSet support;
  Eigen::VectorXd attractor;  // closed-form latent fixed point
};

// Linear encoder/decoder pair learned online.  Latent coordinates already
// used by a stored association are frozen; later patterns only write the
// rows/columns that are still free, so earlier decoder mappings are never
// touched.  The encoder's frozen coordinates respond to a new pattern with
// its overlap against the old one; exactness there is limited to the freshly
// bound coordinates (see update_encoder).
struct MemoryModel {
  Eigen::MatrixXd W_E;  // d x n, target = W_E' P
  Eigen::MatrixXd W_D;  // n x d, readout = W_D' x
  std::set<int> frozen_rows;
  std::vector<RegistryEntry> registry;
};

MemoryModel make_model(int d, int n);

struct InferenceResult {
  Eigen::VectorXd reconstructed;
  SupportSet matched_support;
  double similarity = 0.0;  // against the presented (possibly noisy) input
  std::optional<bool> target_in_certified_region;
  bool converged = false;
  Eigen::VectorXd final_state;
  Eigen::VectorXd target;  // encoded presentation, before any control
};

struct LearnReport {
  bool bound = false;
  bool already_known = false;
  int attempts = 0;
  SupportSet support;
};

// Session knobs shared by learning and inference runs.
struct SessionConfig {
  TriggerConfig trigger;
  LearnControlConfig control;
  LqrAuxConfig aux;
  IntegratorConfig integ{1e-3, 60.0, 1e-8, 100, 0};
  // Inference feedback strength.  Stiffer than the learning gate so the
  // state parks close to the encoded target before release.
  double r_infer = 20.0;
  double settle_t_max = 40.0;
  // Gate level at which the controlled phase hands over to free settling.
  // Residual actuation below this is negligible next to the cell margins,
  // and waiting for a full decay roughly doubles session length.
  double g_off_threshold = 0.05;
  int retry_max = 5;
};

double cosine_similarity(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

Eigen::VectorXd encode(const MemoryModel& model, const Eigen::VectorXd& P);
Eigen::VectorXd decode(const MemoryModel& model, const Eigen::VectorXd& x);

// Write the still-free latent coordinates of the encoder so they reproduce
// x_star against P; minimum Frobenius norm on the written columns.  Frozen
// coordinates are left untouched.
void update_encoder(MemoryModel& model, const Eigen::VectorXd& P,
                    const Eigen::VectorXd& x_star, const SupportSet& support);

// Mirror update for the decoder rows; afterwards decode(x_star) == P exactly
// (the free rows absorb whatever the frozen rows already contribute).
void update_decoder(MemoryModel& model, const Eigen::VectorXd& P,
                    const Eigen::VectorXd& x_star, const SupportSet& support);

// Gated controller that destabilizes the current attractor pair and biases
// exploration toward the next one.  Usable directly with the integrator for
// trajectory inspection.
class LearnControlSource : public InputSource {
 public:
  LearnControlSource(const Network& net, const MemoryModel& model,
                     Eigen::VectorXd pattern, const SessionConfig& cfg,
                     SupportSet start_support);

  void reset(std::uint64_t seed) override;
  void advance(double t, double dt, const Eigen::VectorXd& x) override;
  ControlInput eval(double t, const Eigen::VectorXd& x) const override;
  const std::vector<std::string>& aux_names() const override;
  Eigen::VectorXd aux_values() const override;

  const TriggerState& trigger() const { return trig_; }
  bool pulse_done(double g_off) const { return trig_.q > 0.5 && trig_.G < g_off; }

 private:
  const Network& net_;
  const MemoryModel& model_;
  Eigen::VectorXd pattern_;
  SessionConfig cfg_;
  Eigen::MatrixXd W_inh_;
  TriggerState trig_;
  double ou_ = 0.0;
  std::mt19937_64 rng_;
};

// Gated feedback toward the encoded target with the continuously estimated
// LQR gain.
class InferControlSource : public InputSource {
 public:
  InferControlSource(const Network& net, const MemoryModel& model,
                     Eigen::VectorXd presented, const SessionConfig& cfg);

  void reset(std::uint64_t seed) override;
  void advance(double t, double dt, const Eigen::VectorXd& x) override;
  ControlInput eval(double t, const Eigen::VectorXd& x) const override;
  const std::vector<std::string>& aux_names() const override;
  Eigen::VectorXd aux_values() const override;

  const TriggerState& trigger() const { return trig_; }
  const Eigen::VectorXd& target() const { return x_tar_; }
  bool pulse_done(double g_off) const { return trig_.q > 0.5 && trig_.G < g_off; }
  bool never_fired(double t) const { return t >= 1.0 && trig_.q < 0.01 && trig_.G < 1e-4; }
  // Readout has matched the presentation for half a time unit.  Once that
  // holds the feedback error is negligible and the session can hand over to
  // free settling; waiting for the pulse timer would idle for many units
  // because a matching readout stalls the charge.
  bool parked(double t) const { return parked_since_ >= 0.0 && t - parked_since_ >= 0.5; }

 private:
  const Network& net_;
  const MemoryModel& model_;
  Eigen::VectorXd presented_;
  Eigen::VectorXd x_tar_;
  SessionConfig cfg_;
  TriggerState trig_;
  LqrAuxState aux_;
  double parked_since_ = -1.0;
};

// Stores a new pattern by driving the latent state to the next free
// attractor and binding encoder/decoder coordinates there.  Re-presenting a
// known pattern (similarity at or above the trigger threshold) is a no-op.
LearnReport learn_pattern(MemoryModel& model, const Network& net, const Pattern& p,
                          const SessionConfig& cfg, Trajectory* traj = nullptr);

// Pattern completion: encode the presentation, pull the latent state toward
// it while the gate is open, release, and read out the attractor reached.
InferenceResult infer_pattern(const MemoryModel& model, const Network& net,
                              const Pattern& noisy, const SessionConfig& cfg,
                              Trajectory* traj = nullptr);

}  // namespace tlnmem
