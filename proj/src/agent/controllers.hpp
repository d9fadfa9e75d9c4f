#pragma once

#include <memory>
#include <string>

#include "common/types.hpp"
#include "envs/env.hpp"

namespace kcbf::agent {

class NominalController {
 public:
  virtual ~NominalController() = default;
  // Action for plant state x at time index step, clamped to the box.
  virtual Vec Act(const Vec& x, long step) const = 0;
};

// u = u_eq − K (x − x_target(step)); K from the DARE of the central-difference
// linearization about the env's equilibrium.
class LqrController : public NominalController {
 public:
  LqrController(const envs::Env& env, const Mat& Q, const Mat& R);
  LqrController(const envs::Env& env, Mat K);

  Vec Act(const Vec& x, long step) const override;
  const Mat& gain() const { return K_; }

 private:
  const envs::Env& env_;
  Mat K_;
};

// Proportional-derivative law on one coordinate: u = kp e − kd ė, e = target − x_i.
class PdController : public NominalController {
 public:
  PdController(const envs::Env& env, int coordinate, int rate_coordinate, double kp,
               double kd);

  Vec Act(const Vec& x, long step) const override;

 private:
  const envs::Env& env_;
  int coordinate_;
  int rate_coordinate_;  // −1 when there is no rate state
  double kp_;
  double kd_;
};

// Default LQR weights per env: identity state cost, R = r_scale·I.
std::unique_ptr<NominalController> MakeLqr(const envs::Env& env);
// Default PD gains; synthetic_contact drives v toward the constraint-free
// target 0.5 (PD) and cartpole uses an LQR-like cascade.
std::unique_ptr<NominalController> MakePd(const envs::Env& env);

}  // namespace kcbf::agent
