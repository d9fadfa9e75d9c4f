#include "agent/controllers.hpp"

#include "common/error.hpp"
#include "numerics/dare.hpp"

namespace kcbf::agent {

LqrController::LqrController(const envs::Env& env, const Mat& Q, const Mat& R) : env_(env) {
  const auto lin = envs::Linearize(env, env.EquilibriumState(), env.EquilibriumAction());
  K_ = numerics::SolveDare(lin.A, lin.B, Q, R).K;
}

LqrController::LqrController(const envs::Env& env, Mat K) : env_(env), K_(std::move(K)) {
  KCBF_REQUIRE(K_.rows() == env.spec().action_dim && K_.cols() == env.spec().state_dim,
               ErrorCode::kInvalidArgument, "gain has the wrong shape");
}

Vec LqrController::Act(const Vec& x, long step) const {
  const Vec u = env_.EquilibriumAction() - K_ * (x - env_.TargetState(step));
  return env_.spec().action_box.Clamp(u);
}

PdController::PdController(const envs::Env& env, int coordinate, int rate_coordinate,
                           double kp, double kd)
    : env_(env), coordinate_(coordinate), rate_coordinate_(rate_coordinate), kp_(kp), kd_(kd) {
  const int n = env.spec().state_dim;
  KCBF_REQUIRE(coordinate >= 0 && coordinate < n && rate_coordinate < n,
               ErrorCode::kInvalidArgument, "PD coordinate out of range");
}

Vec PdController::Act(const Vec& x, long step) const {
  const Vec target = env_.TargetState(step);
  double s = kp_ * (target(coordinate_) - x(coordinate_));
  if (rate_coordinate_ >= 0) s -= kd_ * (x(rate_coordinate_) - target(rate_coordinate_));
  const Vec u = env_.EquilibriumAction() + Vec::Constant(env_.spec().action_dim, s);
  return env_.spec().action_box.Clamp(u);
}

namespace {

// Targets v_max: the plant rewards speed, so the nominal law rides the bound.
class SyntheticPd : public NominalController {
 public:
  SyntheticPd(const envs::SyntheticContact& env, double kp) : env_(env), kp_(kp) {}
  Vec Act(const Vec& x, long) const override {
    Vec u(1);
    u(0) = kp_ * (env_.params().v_max - x(0));
    return env_.spec().action_box.Clamp(u);
  }

 private:
  const envs::SyntheticContact& env_;
  double kp_;
};

}  // namespace

std::unique_ptr<NominalController> MakeLqr(const envs::Env& env) {
  const int n = env.spec().state_dim, m = env.spec().action_dim;
  if (const auto* sc = dynamic_cast<const envs::SyntheticContact*>(&env)) {
    Mat a(1, 1), b(1, 1), q(1, 1), r(1, 1);
    a << 1.0;
    b << sc->params().gain;
    q << 1.0;
    r << 0.1;
    Mat K = Mat::Zero(1, 2);
    K(0, 0) = numerics::SolveDare(a, b, q, r).K(0, 0);
    return std::make_unique<LqrController>(env, K);
  }
  const double r_scale = env.spec().name.rfind("quadrotor", 0) == 0 ? 1.0 : 0.1;
  return std::make_unique<LqrController>(env, Mat::Identity(n, n),
                                         r_scale * Mat::Identity(m, m));
}

std::unique_ptr<NominalController> MakePd(const envs::Env& env) {
  if (const auto* sc = dynamic_cast<const envs::SyntheticContact*>(&env)) {
    return std::make_unique<SyntheticPd>(*sc, 10.0);
  }
  const std::string& name = env.spec().name;
  if (name.rfind("cartpole", 0) == 0) {
    // Pole angle loop: push toward the lean.
    return std::make_unique<PdController>(env, 1, 3, -40.0, -4.0);
  }
  if (name.rfind("quadrotor", 0) == 0) {
    // Collective thrust on altitude.
    return std::make_unique<PdController>(env, 1, 4, 0.5, 0.15);
  }
  Throw(ErrorCode::kUnknownKind, "no PD law for env " + name);
}

}  // namespace kcbf::agent
