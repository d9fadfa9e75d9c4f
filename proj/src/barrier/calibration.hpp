#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "barrier/barrier.hpp"
#include "common/json_util.hpp"
#include "koopman/model.hpp"

namespace kcbf::barrier {

enum class QuantileMode { kEmpirical, kConformal };

const char* ToString(QuantileMode mode);
QuantileMode QuantileModeFromString(const std::string& s);

// ⌈x⌉ that forgives representation error: values within about 1e-9 of an
// integer round to it. Used for the conformal order-statistic index.
std::int64_t TolerantCeil(double x);

// Split-conformal index k = ⌈(n + 1)(1 − α)⌉.
std::int64_t ConformalIndex(std::int64_t n, double alpha);

// Sorted-sample quantile with the "higher" rule: element ⌈q(n − 1)⌉.
double EmpiricalQuantileHigher(std::vector<double> samples, double q);

// k-th smallest (1-based) element, or +inf when k > n.
double OrderStatistic(std::vector<double> samples, std::int64_t k);

// Online tracker of deployment residuals against a calibrated margin.
class CoverageMonitor {
 public:
  CoverageMonitor() = default;
  explicit CoverageMonitor(double rho, std::int64_t observations = 0,
                           std::int64_t exceedances = 0)
      : rho_(rho), observations_(observations), exceedances_(exceedances) {}

  // Records |cᵀ r| for one deployment transition; returns true on exceedance.
  bool Observe(const koopman::KoopmanModel& model, const LiftedBarrier& barrier,
               const koopman::Transition& t);
  bool ObserveResidual(double projected_residual);

  double rho() const { return rho_; }
  std::int64_t observations() const { return observations_; }
  std::int64_t exceedances() const { return exceedances_; }
  double exceedance_rate() const;

 private:
  double rho_ = 0.0;
  std::int64_t observations_ = 0;
  std::int64_t exceedances_ = 0;
};

struct BarrierCalibration {
  std::string label;
  std::vector<double> residuals;  // δ_i = |cᵀ r_i|
  double rho = 0.0;
  std::int64_t conformal_k = 0;   // 0 in empirical mode
  bool rho_infinite = false;
  CoverageMonitor monitor;
};

struct CalibrationReport {
  QuantileMode mode = QuantileMode::kEmpirical;
  double quantile_level = 0.95;  // 1 − α
  std::int64_t num_calibration = 0;
  std::vector<BarrierCalibration> barriers;

  // Copies ρ into the matching barriers (by position).
  void ApplyTo(std::vector<LiftedBarrier>& barriers) const;

  // Feeds one deployment transition to barrier j's monitor.
  bool MonitorCoverage(size_t j, const koopman::KoopmanModel& model,
                       const LiftedBarrier& barrier, const koopman::Transition& t);
};

// δ_{i,j} = |c_jᵀ r_i| over the calibration transitions, then ρ_j from the
// chosen quantile rule. Throws EmptyCalibrationSet.
CalibrationReport CalibrateRho(const koopman::KoopmanModel& model,
                               const std::vector<LiftedBarrier>& barriers,
                               const std::vector<koopman::Transition>& calibration,
                               double quantile_level, QuantileMode mode);

inline constexpr const char* kCalibrationFormat = "kcbf-calibration";
inline constexpr int kCalibrationVersion = 1;

Json CalibrationToJson(const CalibrationReport& report);
CalibrationReport CalibrationFromJson(const Json& j);

// Per-step miscoverage level for a horizon by a union bound.
struct UnionBoundPlan {
  double per_step_alpha = 0.0;           // δ / (T J)
  std::int64_t conformal_k = 0;          // for the supplied N_cal
  bool vacuous = false;                  // k > N_cal → ρ = +inf
  std::int64_t min_calibration_size = 0; // ⌈1/α'⌉ − 1
  double smallest_resolvable_alpha = 0.0;  // 1 / (N_cal + 1)
};

UnionBoundPlan PlanUnionBound(std::int64_t horizon, std::int64_t num_barriers,
                              double target_delta, std::int64_t num_calibration);


}  // namespace kcbf::barrier
