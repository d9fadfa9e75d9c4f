#include "barrier/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace kcbf::barrier {
namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

const char* ToString(QuantileMode mode) {
  return mode == QuantileMode::kConformal ? "conformal" : "empirical";
}

QuantileMode QuantileModeFromString(const std::string& s) {
  if (s == "conformal") return QuantileMode::kConformal;
  if (s == "empirical") return QuantileMode::kEmpirical;
  Throw(ErrorCode::kUnknownKind, "unknown quantile mode '" + s + "'");
}

std::int64_t TolerantCeil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 + 1e-13 * std::abs(x)) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::ceil(x));
}

std::int64_t ConformalIndex(std::int64_t n, double alpha) {
  return TolerantCeil(static_cast<double>(n + 1) * (1.0 - alpha));
}

double EmpiricalQuantileHigher(std::vector<double> samples, double q) {
  KCBF_REQUIRE(!samples.empty(), ErrorCode::kEmptyCalibrationSet,
               "quantile of an empty sample");
  KCBF_REQUIRE(q >= 0.0 && q <= 1.0, ErrorCode::kInvalidArgument,
               "quantile level must be in [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  auto idx = static_cast<size_t>(TolerantCeil(pos));
  idx = std::min(idx, samples.size() - 1);
  return samples[idx];
}

double OrderStatistic(std::vector<double> samples, std::int64_t k) {
  KCBF_REQUIRE(k >= 1, ErrorCode::kInvalidArgument,
               "order statistic index must be >= 1");
  if (k > static_cast<std::int64_t>(samples.size())) return kInf;
  const auto pos = static_cast<size_t>(k - 1);
  std::nth_element(samples.begin(), samples.begin() + static_cast<long>(pos),
                   samples.end());
  return samples[pos];
}

void CalibrationReport::ApplyTo(std::vector<LiftedBarrier>& targets) const {
  KCBF_REQUIRE(targets.size() == barriers.size(), ErrorCode::kInvalidArgument,
               "calibration covers " + std::to_string(barriers.size()) +
                   " barriers, got " + std::to_string(targets.size()));
  for (size_t j = 0; j < targets.size(); ++j) targets[j].rho = barriers[j].rho;
}

bool CalibrationReport::MonitorCoverage(size_t j,
                                        const koopman::KoopmanModel& model,
                                        const LiftedBarrier& barrier,
                                        const koopman::Transition& t) {
  KCBF_REQUIRE(j < barriers.size(), ErrorCode::kInvalidArgument,
               "barrier index out of range");
  return barriers[j].monitor.Observe(model, barrier, t);
}

CalibrationReport CalibrateRho(const koopman::KoopmanModel& model,
                               const std::vector<LiftedBarrier>& barriers,
                               const std::vector<koopman::Transition>& calibration,
                               double quantile_level, QuantileMode mode) {
  KCBF_REQUIRE(!calibration.empty(), ErrorCode::kEmptyCalibrationSet,
               "calibration set is empty");
  KCBF_REQUIRE(quantile_level > 0.0 && quantile_level < 1.0,
               ErrorCode::kInvalidArgument, "quantile level must be in (0, 1)");

  CalibrationReport report;
  report.mode = mode;
  report.quantile_level = quantile_level;
  report.num_calibration = static_cast<std::int64_t>(calibration.size());

  std::vector<Vec> residuals;
  residuals.reserve(calibration.size());
  for (const auto& t : calibration) residuals.push_back(koopman::Residual(model, t));

  for (const LiftedBarrier& b : barriers) {
    KCBF_REQUIRE(b.c.size() == model.lifted_dim(), ErrorCode::kInvalidArgument,
                 "barrier " + b.label + " does not match the lifted dimension");
    BarrierCalibration bc;
    bc.label = b.label;
    bc.residuals.reserve(residuals.size());
    for (const Vec& r : residuals) bc.residuals.push_back(std::abs(b.c.dot(r)));
    if (mode == QuantileMode::kEmpirical) {
      bc.rho = EmpiricalQuantileHigher(bc.residuals, quantile_level);
    } else {
      // (n + 1) · level directly; forming α = 1 − level first loses bits.
      bc.conformal_k = TolerantCeil(static_cast<double>(report.num_calibration + 1) *
                                    quantile_level);
      bc.rho = OrderStatistic(bc.residuals, bc.conformal_k);
    }
    bc.rho_infinite = std::isinf(bc.rho);
    bc.monitor = CoverageMonitor(bc.rho);
    report.barriers.push_back(std::move(bc));
  }
  return report;
}

Json CalibrationToJson(const CalibrationReport& report) {
  Json barriers = Json::array();
  for (const auto& b : report.barriers) {
    barriers.push_back({{"label", b.label},
                        {"rho", NumberToJson(b.rho)},
                        {"rho_infinite", b.rho_infinite},
                        {"conformal_k", b.conformal_k},
                        {"monitor_observations", b.monitor.observations()},
                        {"monitor_exceedances", b.monitor.exceedances()},
                        {"residuals", b.residuals}});
  }
  return {{"format", kCalibrationFormat},
          {"version", kCalibrationVersion},
          {"mode", ToString(report.mode)},
          {"quantile_level", report.quantile_level},
          {"num_calibration", report.num_calibration},
          {"barriers", barriers}};
}

CalibrationReport CalibrationFromJson(const Json& j) {
  RequireFormat(j, kCalibrationFormat, kCalibrationVersion);
  try {
    CalibrationReport r;
    r.mode = QuantileModeFromString(j.at("mode").get<std::string>());
    r.quantile_level = j.at("quantile_level").get<double>();
    r.num_calibration = j.at("num_calibration").get<std::int64_t>();
    for (const Json& jb : j.at("barriers")) {
      BarrierCalibration b;
      b.label = jb.at("label").get<std::string>();
      b.rho = NumberFromJson(jb.at("rho"));
      b.rho_infinite = jb.at("rho_infinite").get<bool>();
      b.conformal_k = jb.at("conformal_k").get<std::int64_t>();
      b.residuals = jb.at("residuals").get<std::vector<double>>();
      b.monitor = CoverageMonitor(b.rho,
                                  jb.value("monitor_observations", std::int64_t{0}),
                                  jb.value("monitor_exceedances", std::int64_t{0}));
      r.barriers.push_back(std::move(b));
    }
    return r;
  } catch (const Json::exception& e) {
    Throw(ErrorCode::kParse, std::string("malformed calibration: ") + e.what());
  }
}

UnionBoundPlan PlanUnionBound(std::int64_t horizon, std::int64_t num_barriers,
                              double target_delta, std::int64_t num_calibration) {
  KCBF_REQUIRE(horizon >= 1 && num_barriers >= 1, ErrorCode::kInvalidArgument,
               "horizon and barrier count must be >= 1");
  KCBF_REQUIRE(target_delta > 0.0 && target_delta < 1.0,
               ErrorCode::kInvalidArgument, "target delta must be in (0, 1)");
  KCBF_REQUIRE(num_calibration >= 0, ErrorCode::kInvalidArgument,
               "calibration size must be nonnegative");
  UnionBoundPlan plan;
  plan.per_step_alpha =
      target_delta / static_cast<double>(horizon * num_barriers);
  plan.conformal_k = ConformalIndex(num_calibration, plan.per_step_alpha);
  plan.vacuous = plan.conformal_k > num_calibration;
  plan.min_calibration_size = TolerantCeil(1.0 / plan.per_step_alpha) - 1;
  plan.smallest_resolvable_alpha = 1.0 / static_cast<double>(num_calibration + 1);
  return plan;
}

bool CoverageMonitor::Observe(const koopman::KoopmanModel& model,
                              const LiftedBarrier& barrier,
                              const koopman::Transition& t) {
  return ObserveResidual(std::abs(barrier.c.dot(koopman::Residual(model, t))));
}

bool CoverageMonitor::ObserveResidual(double projected_residual) {
  ++observations_;
  const bool exceeded = projected_residual > rho_;
  if (exceeded) ++exceedances_;
  return exceeded;
}

double CoverageMonitor::exceedance_rate() const {
  return observations_ == 0
             ? 0.0
             : static_cast<double>(exceedances_) / static_cast<double>(observations_);
}

}  // namespace kcbf::barrier
