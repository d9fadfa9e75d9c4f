#pragma once

#include <string>
#include <vector>

#include "common/types.hpp"

namespace kcbf::barrier {

// h_K(z) = cᵀz + d with one-step decay η ∈ (0, 1] and robust margin ρ ≥ 0.
// ρ may be +inf (an unresolvable conformal level).
struct LiftedBarrier {
  Vec c;
  double d = 0.0;
  double eta = 0.9;
  double rho = 0.0;
  std::string label;

  double Evaluate(const Vec& z) const { return c.dot(z) + d; }
  bool rho_infinite() const;
  void Validate() const;
};

enum class BoundDirection { kUpper, kLower };

// Upper: h = bound − z_i. Lower: h = z_i − bound. The index must address the
// raw-state block of the lift (< state_dim).
LiftedBarrier BoundBarrier(int coordinate_index, double bound_value,
                           BoundDirection direction, int state_dim,
                           int lifted_dim, double eta = 0.9,
                           std::string label = {});

// h = α(z_pos − pos_min) + β z_vel. Restores relative degree one for a
// position bound whose rate is actuated.
LiftedBarrier CompositeBarrier(int pos_index, int vel_index, double pos_min,
                               double alpha, double beta, int state_dim,
                               int lifted_dim, double eta = 0.9,
                               std::string label = {});

// h = v_max − z_vel.
LiftedBarrier VelocityBarrier(int vel_index, double v_max, int state_dim,
                              int lifted_dim, double eta = 0.9,
                              std::string label = {});

// Control authority ‖Bᵀc‖₂ of a barrier under input matrix B.
double ControlAuthority(const LiftedBarrier& barrier, const Mat& B);

}  // namespace kcbf::barrier
