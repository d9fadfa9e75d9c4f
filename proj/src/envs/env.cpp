#include "envs/env.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace kcbf::envs {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sinusoid: p_ref = A sin(2πt/T) over steps.
constexpr double kSinAmplitude = 0.15;
constexpr double kSinPeriod = 200.0;

// Circle in the vertical plane, starting at its lowest point.
constexpr double kCircleRadius = 0.3;
constexpr double kCircleCenterY = 0.5;
constexpr double kCirclePeriod = 400.0;
constexpr double kQuadDt = 0.02;

}  // namespace

double StateConstraint::Evaluate(const Vec& x) const {
  return direction == barrier::BoundDirection::kUpper ? bound - x(coordinate)
                                                      : x(coordinate) - bound;
}

void EnvSpec::Validate() const {
  KCBF_REQUIRE(dt > 0.0, ErrorCode::kInvalidArgument, "env dt must be positive");
  KCBF_REQUIRE(horizon >= 1, ErrorCode::kInvalidArgument, "env horizon must be >= 1");
  KCBF_REQUIRE(action_box.dim() == action_dim &&
                   (action_box.lower.array() <= action_box.upper.array()).all(),
               ErrorCode::kInvalidArgument, "env action box is empty");
  for (const auto& c : constraints) {
    KCBF_REQUIRE(c.coordinate >= 0 && c.coordinate < state_dim,
                 ErrorCode::kInvalidArgument, "constraint coordinate out of range");
  }
}

Json EnvSpec::ToJson() const {
  Json cons = Json::array();
  for (const auto& c : constraints) {
    cons.push_back({{"coordinate", c.coordinate},
                    {"bound", c.bound},
                    {"direction", c.direction == barrier::BoundDirection::kUpper
                                      ? "upper"
                                      : "lower"},
                    {"label", c.label}});
  }
  return {{"name", name},
          {"state_dim", state_dim},
          {"action_dim", action_dim},
          {"action_lower", VecToJson(action_box.lower)},
          {"action_upper", VecToJson(action_box.upper)},
          {"dt", dt},
          {"horizon", horizon},
          {"constraints", cons},
          {"reward", reward},
          {"reference", reference},
          {"constants", constants}};
}

Vec MakeReference(const std::string& kind, long step) {
  const double t = static_cast<double>(step);
  if (kind == "none") return Vec(0);
  if (kind == "sinusoid") {
    return Vec::Constant(1, kSinAmplitude * std::sin(kTwoPi * t / kSinPeriod));
  }
  if (kind == "circle") {
    const double w = kTwoPi * t / kCirclePeriod;
    Vec r(2);
    r << kCircleRadius * std::sin(w), kCircleCenterY - kCircleRadius * std::cos(w);
    return r;
  }
  Throw(ErrorCode::kUnknownKind, "unknown reference kind '" + kind + "'");
}

Vec ReferenceRate(const std::string& kind, long step) {
  const double t = static_cast<double>(step);
  if (kind == "none") return Vec(0);
  if (kind == "sinusoid") {
    const double dt = 0.02;
    const double w = kTwoPi / (kSinPeriod * dt);
    return Vec::Constant(1, kSinAmplitude * w * std::cos(kTwoPi * t / kSinPeriod));
  }
  if (kind == "circle") {
    const double w = kTwoPi / (kCirclePeriod * kQuadDt);
    const double phase = kTwoPi * t / kCirclePeriod;
    Vec r(2);
    r << kCircleRadius * w * std::cos(phase), kCircleRadius * w * std::sin(phase);
    return r;
  }
  Throw(ErrorCode::kUnknownKind, "unknown reference kind '" + kind + "'");
}

void Env::Reset(std::mt19937_64& rng) {
  state_ = SampleInitialState(rng);
  step_ = 0;
}

void Env::ResetTo(const Vec& state, long step) {
  KCBF_REQUIRE(state.size() == spec_.state_dim, ErrorCode::kInvalidArgument,
               "state has the wrong dimension");
  KCBF_REQUIRE(state.allFinite(), ErrorCode::kNonFiniteState, "state is not finite");
  state_ = state;
  step_ = step;
}

StepOutcome Env::Step(const Vec& action) {
  KCBF_REQUIRE(state_.size() == spec_.state_dim, ErrorCode::kInvalidArgument,
               "environment was not reset");
  KCBF_REQUIRE(action.size() == spec_.action_dim, ErrorCode::kInvalidArgument,
               "action has the wrong dimension");
  KCBF_REQUIRE(action.allFinite(), ErrorCode::kInvalidArgument, "action is not finite");
  KCBF_REQUIRE(spec_.action_box.Contains(action), ErrorCode::kInvalidArgument,
               "action outside the actuator box");
  Vec next = Propagate(state_, action);
  KCBF_REQUIRE(next.allFinite(), ErrorCode::kNonFiniteState,
               spec_.name + ": state became non-finite");
  StepOutcome out;
  out.applied_action = action;
  ++step_;
  out.reward = Reward(next, action, step_);
  out.h = ConstraintValues(next);
  out.cost = (out.h.size() > 0 && out.h.minCoeff() < 0.0) ? 1 : 0;
  out.terminal = Failed(next);
  out.truncated = step_ >= spec_.horizon;
  out.reference = Reference(step_);
  state_ = next;
  out.state = std::move(next);
  return out;
}

Vec Env::ConstraintValues(const Vec& x) const {
  Vec h(static_cast<Eigen::Index>(spec_.constraints.size()));
  for (size_t j = 0; j < spec_.constraints.size(); ++j) {
    h(static_cast<Eigen::Index>(j)) = spec_.constraints[j].Evaluate(x);
  }
  return h;
}

Vec Env::Reference(long step) const { return MakeReference(spec_.reference, step); }

Vec Env::ModelingState(const Vec& x, long step) const {
  const std::vector<int> tracked = TrackedCoordinates();
  if (tracked.empty()) return x;
  const Vec ref = Reference(step);
  Vec y(static_cast<Eigen::Index>(tracked.size()) + x.size());
  for (size_t i = 0; i < tracked.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = x(tracked[i]) - ref(static_cast<Eigen::Index>(i));
  }
  y.tail(x.size()) = x;
  return y;
}

int Env::model_state_offset() const {
  return static_cast<int>(TrackedCoordinates().size());
}

int Env::model_state_dim() const {
  return static_cast<int>(ModelingState(Vec::Zero(spec_.state_dim), 0).size());
}

Vec Env::Observation(const Vec& x, long step) const {
  const Vec y = ModelingState(x, step);
  const double period = ReferencePeriod();
  if (period <= 0.0) return y;
  const double phase = kTwoPi * static_cast<double>(step) / period;
  Vec o(y.size() + 2);
  o << y, std::sin(phase), std::cos(phase);
  return o;
}

int Env::observation_dim() const {
  return static_cast<int>(Observation(Vec::Zero(spec_.state_dim), 0).size());
}

// CartPole --------------------------------------------------------------

CartPole::CartPole(bool tracking, Params params)
    : Env(EnvSpec{}), params_(params), tracking_(tracking) {
  spec_.name = tracking ? "cartpole_track" : "cartpole_stabilize";
  spec_.state_dim = 4;
  spec_.action_dim = 1;
  spec_.action_box = Box::Symmetric(1, params.force_max);
  spec_.dt = 0.02;
  spec_.horizon = 250;
  spec_.constraints = {
      {0, params.p_max, barrier::BoundDirection::kUpper, "p_upper"},
      {0, -params.p_max, barrier::BoundDirection::kLower, "p_lower"}};
  spec_.reward = tracking ? "exp(-|[p,theta]-ref|^2)" : "exp(-(theta^2+0.1p^2))";
  spec_.reference = tracking ? "sinusoid" : "none";
  spec_.constants = {{"cart_mass", params.cart_mass},
                     {"pole_mass", params.pole_mass},
                     {"half_length", params.half_length},
                     {"gravity", params.gravity},
                     {"force_max", params.force_max},
                     {"p_max", params.p_max},
                     {"theta_fail", params.theta_fail},
                     {"integrator", "rk4"}};
  spec_.Validate();
}

Vec CartPole::Derivative(const Vec& x, const Vec& u) const {
  const double total = params_.cart_mass + params_.pole_mass;
  const double pml = params_.pole_mass * params_.half_length;
  const double th = x(1), pd = x(2), thd = x(3);
  const double s = std::sin(th), c = std::cos(th);
  const double temp = (u(0) + pml * thd * thd * s) / total;
  const double thacc =
      (params_.gravity * s - c * temp) /
      (params_.half_length * (4.0 / 3.0 - params_.pole_mass * c * c / total));
  const double pacc = temp - pml * thacc * c / total;
  Vec d(4);
  d << pd, thd, pacc, thacc;
  return d;
}

Vec CartPole::Propagate(const Vec& x, const Vec& u) const {
  return Rk4([this](const Vec& s, const Vec& a) { return Derivative(s, a); }, x, u,
             spec_.dt);
}

double CartPole::Energy(const Vec& x) const {
  const double M = params_.cart_mass, m = params_.pole_mass, l = params_.half_length;
  const double th = x(1), pd = x(2), thd = x(3);
  return 0.5 * (M + m) * pd * pd + m * l * pd * thd * std::cos(th) +
         (2.0 / 3.0) * m * l * l * thd * thd + m * params_.gravity * l * std::cos(th);
}

Vec CartPole::TargetState(long step) const {
  Vec x = Vec::Zero(4);
  if (tracking_) {
    x(0) = MakeReference("sinusoid", step)(0);
    x(2) = ReferenceRate("sinusoid", step)(0);
  }
  return x;
}

Vec CartPole::SampleInitialState(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-params_.init_halfwidth, params_.init_halfwidth);
  Vec x(4);
  for (Eigen::Index i = 0; i < 4; ++i) x(i) = u(rng);
  return x;
}

double CartPole::Reward(const Vec& x, const Vec&, long step_next) const {
  if (tracking_) {
    const double ep = x(0) - Reference(step_next)(0);
    return std::exp(-(ep * ep + x(1) * x(1)));
  }
  return std::exp(-(x(1) * x(1) + 0.1 * x(0) * x(0)));
}

bool CartPole::Failed(const Vec& x) const { return std::abs(x(1)) > params_.theta_fail; }

std::vector<int> CartPole::TrackedCoordinates() const {
  return tracking_ ? std::vector<int>{0} : std::vector<int>{};
}

double CartPole::ReferencePeriod() const { return tracking_ ? kSinPeriod : 0.0; }

// Quadrotor2D -----------------------------------------------------------

Quadrotor2D::Quadrotor2D(bool tracking, Params params)
    : Env(EnvSpec{}), params_(params), tracking_(tracking) {
  spec_.name = tracking ? "quadrotor_track" : "quadrotor_hover";
  spec_.state_dim = 6;
  spec_.action_dim = 2;
  const double t_max = 2.0 * params.mass * params.gravity;
  spec_.action_box = {Vec::Zero(2), Vec::Constant(2, t_max)};
  spec_.dt = kQuadDt;
  spec_.horizon = 500;
  spec_.constraints = {{1, params.y_min, barrier::BoundDirection::kLower, "y_min"}};
  spec_.reward = tracking ? "exp(-|[x,y]-ref|^2)" : "exp(-(|[x,y]-target|^2+0.1phi^2))";
  spec_.reference = tracking ? "circle" : "none";
  spec_.constants = {{"mass", params.mass},
                     {"arm", params.arm},
                     {"inertia", inertia()},
                     {"inertia_model", "slender rod m*arm^2/3"},
                     {"gravity", params.gravity},
                     {"y_min", params.y_min},
                     {"hover_y", params.hover_y},
                     {"phi_fail", params.phi_fail},
                     {"integrator", "rk4"}};
  spec_.Validate();
}

double Quadrotor2D::inertia() const {
  return params_.mass * params_.arm * params_.arm / 3.0;
}

Vec Quadrotor2D::Derivative(const Vec& x, const Vec& u) const {
  const double thrust = u(0) + u(1);
  const double phi = x(2);
  Vec d(6);
  d << x(3), x(4), x(5), -thrust * std::sin(phi) / params_.mass,
      thrust * std::cos(phi) / params_.mass - params_.gravity,
      params_.arm * (u(1) - u(0)) / inertia();
  return d;
}

Vec Quadrotor2D::Propagate(const Vec& x, const Vec& u) const {
  return Rk4([this](const Vec& s, const Vec& a) { return Derivative(s, a); }, x, u,
             spec_.dt);
}

Vec Quadrotor2D::EquilibriumState() const {
  Vec x = Vec::Zero(6);
  x(1) = params_.hover_y;
  return x;
}

Vec Quadrotor2D::EquilibriumAction() const {
  return Vec::Constant(2, 0.5 * params_.mass * params_.gravity);
}

Vec Quadrotor2D::TargetState(long step) const {
  if (!tracking_) return EquilibriumState();
  const Vec r = MakeReference("circle", step);
  const Vec v = ReferenceRate("circle", step);
  Vec x = Vec::Zero(6);
  x(0) = r(0);
  x(1) = r(1);
  x(3) = v(0);
  x(4) = v(1);
  return x;
}

Vec Quadrotor2D::SampleInitialState(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-params_.init_halfwidth, params_.init_halfwidth);
  Vec x = TargetState(0);
  for (Eigen::Index i = 0; i < 6; ++i) x(i) += u(rng);
  return x;
}

double Quadrotor2D::Reward(const Vec& x, const Vec&, long step_next) const {
  const Vec target = tracking_ ? MakeReference("circle", step_next)
                               : EquilibriumState().head(2);
  const double e2 = (x.head(2) - target).squaredNorm();
  return tracking_ ? std::exp(-e2) : std::exp(-(e2 + 0.1 * x(2) * x(2)));
}

bool Quadrotor2D::Failed(const Vec& x) const {
  return std::abs(x(2)) > params_.phi_fail || x(1) < 0.0 || std::abs(x(0)) > 3.0 ||
         x(1) > 3.0;
}

std::vector<int> Quadrotor2D::TrackedCoordinates() const {
  return tracking_ ? std::vector<int>{0, 1} : std::vector<int>{};
}

double Quadrotor2D::ReferencePeriod() const { return tracking_ ? kCirclePeriod : 0.0; }

// SyntheticContact -------------------------------------------------------

SyntheticContact::SyntheticContact(Params params)
    : Env(EnvSpec{}), params_(params) {
  spec_.name = "synthetic_contact";
  spec_.state_dim = 2;
  spec_.action_dim = 1;
  spec_.action_box = Box::Symmetric(1, 1.0);
  spec_.dt = 1.0;
  spec_.horizon = 300;
  spec_.constraints = {{0, params.v_max, barrier::BoundDirection::kUpper, "v_max"}};
  spec_.reward = "v";
  spec_.reference = "none";
  spec_.constants = {{"v_max", params.v_max},
                     {"gain", params.gain},
                     {"impulse", params.impulse},
                     {"period", params.period},
                     {"v_fail", params.v_fail}};
  spec_.Validate();
}

Vec SyntheticContact::Propagate(const Vec& x, const Vec& u) const {
  const int phase = (static_cast<int>(x(1)) + 1) % params_.period;
  const double jump = phase == 0 ? params_.impulse : 0.0;
  Vec next(2);
  next << x(0) + params_.gain * u(0) + jump, static_cast<double>(phase);
  return next;
}

Vec SyntheticContact::ModelingState(const Vec& x, long) const { return x.head(1); }

Vec SyntheticContact::Observation(const Vec& x, long) const { return x.head(1); }

Vec SyntheticContact::EquilibriumState() const { return Vec::Zero(2); }

Vec SyntheticContact::SampleInitialState(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-params_.init_halfwidth, params_.init_halfwidth);
  std::uniform_int_distribution<int> phase(0, params_.period - 1);
  Vec x(2);
  x(0) = u(rng);
  x(1) = static_cast<double>(phase(rng));
  return x;
}

double SyntheticContact::Reward(const Vec& x, const Vec&, long) const { return x(0); }

bool SyntheticContact::Failed(const Vec& x) const {
  return std::abs(x(0)) > params_.v_fail;
}

// Factory ---------------------------------------------------------------

std::unique_ptr<Env> MakeEnv(const std::string& name) {
  if (name == "cartpole_stabilize") return std::make_unique<CartPole>(false);
  if (name == "cartpole_track") return std::make_unique<CartPole>(true);
  if (name == "quadrotor_hover") return std::make_unique<Quadrotor2D>(false);
  if (name == "quadrotor_track") return std::make_unique<Quadrotor2D>(true);
  if (name == "synthetic_contact") return std::make_unique<SyntheticContact>();
  Throw(ErrorCode::kUnknownKind, "unknown environment '" + name + "'");
}

std::vector<std::string> EnvNames() {
  return {"cartpole_stabilize", "cartpole_track", "quadrotor_hover", "quadrotor_track",
          "synthetic_contact"};
}

DiscreteLinearization Linearize(const Env& env, const Vec& x, const Vec& u, double eps) {
  const auto n = x.size();
  const auto m = u.size();
  DiscreteLinearization lin{Mat(n, n), Mat(n, m)};
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp(i) += eps;
    xm(i) -= eps;
    lin.A.col(i) = (env.Propagate(xp, u) - env.Propagate(xm, u)) / (2.0 * eps);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    Vec up = u, um = u;
    up(i) += eps;
    um(i) -= eps;
    lin.B.col(i) = (env.Propagate(x, up) - env.Propagate(x, um)) / (2.0 * eps);
  }
  return lin;
}

}  // namespace kcbf::envs
