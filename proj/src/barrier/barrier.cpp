#include "barrier/barrier.hpp"

#include <cmath>

#include "common/error.hpp"

namespace kcbf::barrier {
namespace {

void CheckStateIndex(int index, int state_dim, int lifted_dim) {
  KCBF_REQUIRE(state_dim >= 1 && lifted_dim >= state_dim,
               ErrorCode::kInvalidArgument, "invalid lifted/state dimensions");
  KCBF_REQUIRE(index >= 0 && index < state_dim,
               ErrorCode::kIndexOutOfStateBlock,
               "coordinate " + std::to_string(index) +
                   " is outside the raw-state block [0, " +
                   std::to_string(state_dim) + ")");
}

}  // namespace

bool LiftedBarrier::rho_infinite() const { return std::isinf(rho); }

void LiftedBarrier::Validate() const {
  KCBF_REQUIRE(eta > 0.0 && eta <= 1.0, ErrorCode::kInvalidArgument,
               "barrier " + label + ": eta must lie in (0, 1]");
  KCBF_REQUIRE(rho >= 0.0, ErrorCode::kInvalidArgument,
               "barrier " + label + ": rho must be nonnegative");
  KCBF_REQUIRE(c.size() > 0 && c.cwiseAbs().maxCoeff() > 0.0,
               ErrorCode::kInvalidArgument,
               "barrier " + label + ": normal c must be nonzero");
  KCBF_REQUIRE(std::isfinite(d) && c.allFinite(), ErrorCode::kInvalidArgument,
               "barrier " + label + ": c and d must be finite");
}

LiftedBarrier BoundBarrier(int coordinate_index, double bound_value,
                           BoundDirection direction, int state_dim,
                           int lifted_dim, double eta, std::string label) {
  CheckStateIndex(coordinate_index, state_dim, lifted_dim);
  LiftedBarrier b;
  b.c = Vec::Zero(lifted_dim);
  if (direction == BoundDirection::kUpper) {
    b.c(coordinate_index) = -1.0;
    b.d = bound_value;
  } else {
    b.c(coordinate_index) = 1.0;
    b.d = -bound_value;
  }
  b.eta = eta;
  b.label = label.empty()
                ? (direction == BoundDirection::kUpper ? "upper_" : "lower_") +
                      std::to_string(coordinate_index)
                : std::move(label);
  b.Validate();
  return b;
}

LiftedBarrier CompositeBarrier(int pos_index, int vel_index, double pos_min,
                               double alpha, double beta, int state_dim,
                               int lifted_dim, double eta, std::string label) {
  KCBF_REQUIRE(alpha > 0.0 && beta >= 0.0, ErrorCode::kNonpositiveWeights,
               "composite barrier needs alpha > 0 and beta >= 0");
  CheckStateIndex(pos_index, state_dim, lifted_dim);
  CheckStateIndex(vel_index, state_dim, lifted_dim);
  LiftedBarrier b;
  b.c = Vec::Zero(lifted_dim);
  b.c(pos_index) += alpha;
  b.c(vel_index) += beta;
  b.d = -alpha * pos_min;
  b.eta = eta;
  b.label = label.empty() ? "composite_" + std::to_string(pos_index) : std::move(label);
  b.Validate();
  return b;
}

LiftedBarrier VelocityBarrier(int vel_index, double v_max, int state_dim,
                              int lifted_dim, double eta, std::string label) {
  return BoundBarrier(vel_index, v_max, BoundDirection::kUpper, state_dim,
                      lifted_dim, eta,
                      label.empty() ? "velocity_" + std::to_string(vel_index)
                                    : std::move(label));
}

double ControlAuthority(const LiftedBarrier& barrier, const Mat& B) {
  return (B.transpose() * barrier.c).norm();
}

}  // namespace kcbf::barrier
