#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "barrier/barrier.hpp"
#include "common/types.hpp"
#include "koopman/model.hpp"
#include "numerics/qp.hpp"

namespace kcbf::filter {

// a·u ≥ b with a = Bᵀc and b = (1 − η)(cᵀz + d) + ρ − cᵀAz − d.
struct ConstraintRow {
  Vec a;
  double b = 0.0;
  double h = 0.0;  // barrier value at the current z
  std::string barrier_label;
  bool degenerate = false;  // ‖a‖ below the degeneracy threshold
  bool infinite = false;    // ρ = +inf, row cannot be enforced
};

inline constexpr double kDegeneracyThreshold = 1e-6;

std::vector<ConstraintRow> AssembleConstraints(
    const Mat& A, const Mat& B, const std::vector<barrier::LiftedBarrier>& barriers,
    const Vec& z, double degeneracy_threshold = kDegeneracyThreshold);

std::vector<ConstraintRow> AssembleConstraints(
    const koopman::KoopmanModel& model,
    const std::vector<barrier::LiftedBarrier>& barriers, const Vec& z,
    double degeneracy_threshold = kDegeneracyThreshold);

enum class Certificate {
  kEnforced,
  kSlackActive,
  kTriviallySatisfied,
  kDegenerateRow,
  kInfiniteRho,
};

const char* ToString(Certificate c);

enum class SlackMode {
  // Solve with ξ = 0 first; fall back to the slack QP only when the hard
  // rows and the box have no common point.
  kHardFirst,
  // Always solve the slack-augmented QP over (u, ξ).
  kAlwaysSlack,
};

struct FilterOptions {
  double slack_weight = 1e4;       // λ_ξ in λ_ξ Σ ξ²
  double intervention_eps = 1e-6;  // ‖u_safe − u_nom‖ above this counts
  double slack_tol = 1e-8;
  SlackMode mode = SlackMode::kHardFirst;
  numerics::QpOptions qp;
};

struct FilterResult {
  Vec u_safe;
  Vec xi;  // per row; +inf for rows with infinite ρ
  bool intervened = false;
  double intervention_norm = 0.0;
  Certificate certificate = Certificate::kEnforced;
  bool used_slack = false;
  bool nominal_clamped = false;
  numerics::QpSolution qp;
  std::vector<ConstraintRow> rows;
};

// Minimally invasive projection of u_nom onto the assembled rows and box.
FilterResult FilterRows(const std::vector<ConstraintRow>& rows, const Vec& u_nom,
                        const Box& box, const FilterOptions& options = {});

FilterResult FilterAction(const koopman::KoopmanModel& model,
                          const std::vector<barrier::LiftedBarrier>& barriers,
                          const Vec& z, const Vec& u_nom, const Box& box,
                          const FilterOptions& options = {});

enum class Regime { kFilterActive, kInfeasibleProneness, kTriviallySatisfied };

const char* ToString(Regime r);

struct RegimeReport {
  Regime regime = Regime::kFilterActive;
  bool unsafe = false;  // trivially satisfied while h < 0
};

// Interval arithmetic of a·u over the box against b, per row.
std::vector<RegimeReport> ClassifyRegime(const std::vector<ConstraintRow>& rows,
                                         const Box& box);

double MinOverBox(const Vec& a, const Box& box);
double MaxOverBox(const Vec& a, const Box& box);

// Σ max(0, b − a·u)² over finite rows, and its gradient in u.
double CbfPenalty(const std::vector<ConstraintRow>& rows, const Vec& u);
Vec CbfPenaltyGradient(const std::vector<ConstraintRow>& rows, const Vec& u);

// Per-step CSV: step, h_*, b_*, xi_*, certificate, intervention_norm.
class FilterTraceWriter {
 public:
  FilterTraceWriter(std::ostream& out, const std::vector<std::string>& labels);
  void Write(long step, const FilterResult& result);

 private:
  std::ostream& out_;
  size_t num_rows_;
};

}  // namespace kcbf::filter
