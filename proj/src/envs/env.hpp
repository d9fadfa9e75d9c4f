#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "barrier/barrier.hpp"
#include "common/json_util.hpp"
#include "common/types.hpp"

namespace kcbf::envs {

// h = bound − x_i (upper) or x_i − bound (lower) on the raw plant state.
struct StateConstraint {
  int coordinate = 0;
  double bound = 0.0;
  barrier::BoundDirection direction = barrier::BoundDirection::kUpper;
  std::string label;

  double Evaluate(const Vec& x) const;
};

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Box action_box;
  double dt = 0.0;
  int horizon = 0;
  std::vector<StateConstraint> constraints;
  std::string reward;     // descriptor
  std::string reference;  // none | sinusoid | circle
  Json constants;         // physical parameters

  void Validate() const;
  Json ToJson() const;
};

struct StepOutcome {
  Vec state;
  double reward = 0.0;
  int cost = 0;            // 1 if any constraint is violated at `state`
  bool terminal = false;   // failure set reached
  bool truncated = false;  // horizon reached
  bool done() const { return terminal || truncated; }
  Vec h;                   // constraint values at `state`
  Vec reference;           // reference at the new step (empty if none)
  Vec applied_action;      // echo of the action integrated this step
};

// Reference generators. sinusoid → [p_ref]; circle → [x_ref, y_ref].
Vec MakeReference(const std::string& kind, long step);
Vec ReferenceRate(const std::string& kind, long step);  // d/dt of the above

// Classic fourth-order Runge–Kutta step of ẋ = f(x, u) with held u.
template <typename F>
Vec Rk4(const F& f, const Vec& x, const Vec& u, double dt) {
  const Vec k1 = f(x, u);
  const Vec k2 = f(x + 0.5 * dt * k1, u);
  const Vec k3 = f(x + 0.5 * dt * k2, u);
  const Vec k4 = f(x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  const Vec& state() const { return state_; }
  long step_count() const { return step_; }

  // Samples the initial state from the env's start distribution.
  void Reset(std::mt19937_64& rng);
  void ResetTo(const Vec& state, long step = 0);

  // Throws InvalidArgument outside the action box, NonFiniteState on blowup.
  StepOutcome Step(const Vec& action);

  // One plant step from an arbitrary state; no bookkeeping.
  virtual Vec Propagate(const Vec& x, const Vec& u) const = 0;

  Vec ConstraintValues(const Vec& x) const;
  Vec Reference(long step) const;

  // Koopman modeling state: [e; x] for tracking tasks, x otherwise (the
  // synthetic plant hides its phase). The raw-state block starts at
  // model_state_offset().
  virtual Vec ModelingState(const Vec& x, long step) const;
  int model_state_offset() const;
  int model_state_dim() const;
  // Index in the modeling state of plant coordinate i.
  int ModelIndex(int plant_coordinate) const { return model_state_offset() + plant_coordinate; }

  // Agent input: modeling state plus the reference phase for tracking.
  virtual Vec Observation(const Vec& x, long step) const;
  int observation_dim() const;

  // Operating point for linear nominal controllers.
  virtual Vec EquilibriumState() const = 0;
  virtual Vec EquilibriumAction() const = 0;
  // Target the nominal controller regulates to at `step` (reference-shifted
  // equilibrium for tracking tasks).
  virtual Vec TargetState(long step) const { (void)step; return EquilibriumState(); }

  Vec ModelingState() const { return ModelingState(state_, step_); }
  Vec Observation() const { return Observation(state_, step_); }

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}

  virtual Vec SampleInitialState(std::mt19937_64& rng) const = 0;
  virtual double Reward(const Vec& x_next, const Vec& u, long step_next) const = 0;
  virtual bool Failed(const Vec& x) const = 0;
  // Tracked plant coordinates for e = x[tracked] − ref.
  virtual std::vector<int> TrackedCoordinates() const { return {}; }
  virtual double ReferencePeriod() const { return 0.0; }

  EnvSpec spec_;
  Vec state_;
  long step_ = 0;
};

struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gravity = 9.8;
  double force_max = 10.0;
  double p_max = 0.2;
  double theta_fail = 0.4;
  double init_halfwidth = 0.05;
};

class CartPole : public Env {
 public:
  using Params = CartPoleParams;

  explicit CartPole(bool tracking, Params params = {});

  Vec Propagate(const Vec& x, const Vec& u) const override;
  Vec Derivative(const Vec& x, const Vec& u) const;
  // Total mechanical energy (cart + rod pole), for integrator checks.
  double Energy(const Vec& x) const;

  Vec EquilibriumState() const override { return Vec::Zero(4); }
  Vec EquilibriumAction() const override { return Vec::Zero(1); }
  Vec TargetState(long step) const override;

  const Params& params() const { return params_; }

 protected:
  Vec SampleInitialState(std::mt19937_64& rng) const override;
  double Reward(const Vec& x_next, const Vec& u, long step_next) const override;
  bool Failed(const Vec& x) const override;
  std::vector<int> TrackedCoordinates() const override;
  double ReferencePeriod() const override;

 private:
  Params params_;
  bool tracking_;
};

struct QuadrotorParams {
  double mass = 0.027;
  double arm = 0.0397;
  double gravity = 9.81;
  double y_min = 0.1;
  double hover_y = 0.5;
  double init_halfwidth = 0.05;
  double phi_fail = 1.2;
};

class Quadrotor2D : public Env {
 public:
  using Params = QuadrotorParams;

  explicit Quadrotor2D(bool tracking, Params params = {});

  Vec Propagate(const Vec& x, const Vec& u) const override;
  Vec Derivative(const Vec& x, const Vec& u) const;
  double inertia() const;

  Vec EquilibriumState() const override;
  Vec EquilibriumAction() const override;
  Vec TargetState(long step) const override;

  const Params& params() const { return params_; }

 protected:
  Vec SampleInitialState(std::mt19937_64& rng) const override;
  double Reward(const Vec& x_next, const Vec& u, long step_next) const override;
  bool Failed(const Vec& x) const override;
  std::vector<int> TrackedCoordinates() const override;
  double ReferencePeriod() const override;

 private:
  Params params_;
  bool tracking_;
};

struct SyntheticContactParams {
  double v_max = 1.0;
  double gain = 0.1;
  double impulse = 0.5;
  int period = 10;
  double v_fail = 10.0;
  double init_halfwidth = 0.5;
};

// Velocity plant with a hidden periodic impulse. State [v, phase].
class SyntheticContact : public Env {
 public:
  using Params = SyntheticContactParams;

  explicit SyntheticContact(Params params = {});

  using Env::ModelingState;
  using Env::Observation;

  Vec Propagate(const Vec& x, const Vec& u) const override;
  Vec ModelingState(const Vec& x, long step) const override;
  Vec Observation(const Vec& x, long step) const override;

  Vec EquilibriumState() const override;
  Vec EquilibriumAction() const override { return Vec::Zero(1); }

  const Params& params() const { return params_; }

 protected:
  Vec SampleInitialState(std::mt19937_64& rng) const override;
  double Reward(const Vec& x_next, const Vec& u, long step_next) const override;
  bool Failed(const Vec& x) const override;

 private:
  Params params_;
};

// cartpole_stabilize | cartpole_track | quadrotor_hover | quadrotor_track |
// synthetic_contact. Throws UnknownKind.
std::unique_ptr<Env> MakeEnv(const std::string& name);
std::vector<std::string> EnvNames();

// Central-difference Jacobians of Propagate at (x, u): x⁺ ≈ A dx + B du.
struct DiscreteLinearization {
  Mat A;
  Mat B;
};
DiscreteLinearization Linearize(const Env& env, const Vec& x, const Vec& u,
                                double eps = 1e-6);

}  // namespace kcbf::envs
