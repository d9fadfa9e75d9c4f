#include "filter/safety_filter.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "common/error.hpp"

namespace kcbf::filter {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Unsafe and trivially satisfied: h < 0 while b ≤ min over the box.
bool UnsafeTrivial(const ConstraintRow& row, const Box& box) {
  return !row.infinite && !row.degenerate && row.h < 0.0 &&
         row.b <= MinOverBox(row.a, box);
}

}  // namespace

std::vector<ConstraintRow> AssembleConstraints(
    const Mat& A, const Mat& B, const std::vector<barrier::LiftedBarrier>& barriers,
    const Vec& z, double degeneracy_threshold) {
  KCBF_REQUIRE(z.size() == A.cols() && A.rows() == A.cols() && B.rows() == A.rows(),
               ErrorCode::kInvalidArgument,
               "lifted state of size " + std::to_string(z.size()) +
                   " does not match the model");
  const Vec Az = A * z;
  std::vector<ConstraintRow> rows;
  rows.reserve(barriers.size());
  for (const auto& bar : barriers) {
    KCBF_REQUIRE(bar.c.size() == z.size(), ErrorCode::kInvalidArgument,
                 "barrier " + bar.label + " does not match the lifted dimension");
    ConstraintRow row;
    row.barrier_label = bar.label;
    row.a = B.transpose() * bar.c;
    row.h = bar.Evaluate(z);
    row.infinite = bar.rho_infinite();
    row.b = row.infinite ? kInf
                         : (1.0 - bar.eta) * row.h + bar.rho - bar.c.dot(Az) - bar.d;
    row.degenerate = row.a.norm() < degeneracy_threshold;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ConstraintRow> AssembleConstraints(
    const koopman::KoopmanModel& model,
    const std::vector<barrier::LiftedBarrier>& barriers, const Vec& z,
    double degeneracy_threshold) {
  return AssembleConstraints(model.A, model.B, barriers, z, degeneracy_threshold);
}

const char* ToString(Certificate c) {
  switch (c) {
    case Certificate::kEnforced: return "enforced";
    case Certificate::kSlackActive: return "slack_active";
    case Certificate::kTriviallySatisfied: return "trivially_satisfied";
    case Certificate::kDegenerateRow: return "degenerate_row";
    case Certificate::kInfiniteRho: return "infinite_rho";
  }
  return "unknown";
}

const char* ToString(Regime r) {
  switch (r) {
    case Regime::kFilterActive: return "filter_active";
    case Regime::kInfeasibleProneness: return "infeasible_proneness";
    case Regime::kTriviallySatisfied: return "trivially_satisfied";
  }
  return "unknown";
}

double MinOverBox(const Vec& a, const Box& box) {
  return a.cwiseProduct(box.lower).cwiseMin(a.cwiseProduct(box.upper)).sum();
}

double MaxOverBox(const Vec& a, const Box& box) {
  return a.cwiseProduct(box.lower).cwiseMax(a.cwiseProduct(box.upper)).sum();
}

FilterResult FilterRows(const std::vector<ConstraintRow>& rows, const Vec& u_nom,
                        const Box& box, const FilterOptions& options) {
  const Eigen::Index nu = box.dim();
  KCBF_REQUIRE(u_nom.size() == nu, ErrorCode::kInvalidArgument,
               "nominal action has the wrong dimension");
  KCBF_REQUIRE((box.lower.array() <= box.upper.array()).all(),
               ErrorCode::kInvalidArgument, "empty action box");
  KCBF_REQUIRE(options.slack_weight > 0.0, ErrorCode::kInvalidArgument,
               "slack weight must be positive");
  KCBF_REQUIRE(u_nom.allFinite(), ErrorCode::kNonFiniteState,
               "nominal action is not finite");

  FilterResult res;
  res.rows = rows;
  const Vec u_ref = box.Clamp(u_nom);
  res.nominal_clamped = (u_ref.array() != u_nom.array()).any();

  std::vector<size_t> qp_rows;
  for (size_t j = 0; j < rows.size(); ++j) {
    KCBF_REQUIRE(rows[j].a.size() == nu, ErrorCode::kInvalidArgument,
                 "constraint row has the wrong action dimension");
    if (!rows[j].infinite && !rows[j].degenerate) qp_rows.push_back(j);
  }
  const auto m = static_cast<Eigen::Index>(qp_rows.size());

  Mat normals(m, nu);
  Vec offsets(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    normals.row(k) = rows[qp_rows[static_cast<size_t>(k)]].a.transpose();
    offsets(k) = rows[qp_rows[static_cast<size_t>(k)]].b;
  }

  Vec qp_xi = Vec::Zero(m);
  bool solved = false;
  if (options.mode == SlackMode::kHardFirst) {
    numerics::QpProblem hard{Vec::Ones(nu), -u_ref, normals, offsets, box.lower,
                             box.upper};
    try {
      res.qp = numerics::SolveQp(hard, options.qp);
      res.u_safe = res.qp.x;
      solved = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
    }
  }
  if (!solved) {
    // Variables (u, ξ): ½‖u − u_ref‖² + λ_ξ Σ ξ², a·u + ξ ≥ b, ξ ≥ 0.
    numerics::QpProblem soft;
    soft.hessian_diag.resize(nu + m);
    soft.hessian_diag << Vec::Ones(nu), Vec::Constant(m, 2.0 * options.slack_weight);
    soft.linear_term.resize(nu + m);
    soft.linear_term << -u_ref, Vec::Zero(m);
    soft.ineq_normals.resize(m, nu + m);
    soft.ineq_normals << normals, Mat::Identity(m, m);
    soft.ineq_offsets = offsets;
    soft.lower_bounds.resize(nu + m);
    soft.lower_bounds << box.lower, Vec::Zero(m);
    soft.upper_bounds.resize(nu + m);
    soft.upper_bounds << box.upper, Vec::Constant(m, kInf);
    res.qp = numerics::SolveQp(soft, options.qp);
    res.u_safe = res.qp.x.head(nu);
    qp_xi = res.qp.x.tail(m).cwiseMax(0.0);
    res.used_slack = true;
  }
  res.u_safe = box.Clamp(res.u_safe);

  res.xi = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index k = 0; k < m; ++k) {
    res.xi(static_cast<Eigen::Index>(qp_rows[static_cast<size_t>(k)])) = qp_xi(k);
  }
  bool any_infinite = false, any_degenerate = false, any_unsafe_trivial = false;
  for (size_t j = 0; j < rows.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    if (rows[j].infinite) {
      res.xi(jj) = kInf;
      any_infinite = true;
    } else if (rows[j].degenerate) {
      res.xi(jj) = std::max(0.0, rows[j].b - rows[j].a.dot(res.u_safe));
      any_degenerate = true;
    }
    if (UnsafeTrivial(rows[j], box)) any_unsafe_trivial = true;
  }

  double max_finite_xi = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) max_finite_xi = std::max(max_finite_xi, qp_xi(k));

  if (any_infinite) {
    res.certificate = Certificate::kInfiniteRho;
  } else if (any_degenerate) {
    res.certificate = Certificate::kDegenerateRow;
  } else if (max_finite_xi > options.slack_tol) {
    res.certificate = Certificate::kSlackActive;
  } else if (any_unsafe_trivial) {
    res.certificate = Certificate::kTriviallySatisfied;
  } else {
    res.certificate = Certificate::kEnforced;
  }

  res.intervention_norm = (res.u_safe - u_nom).norm();
  res.intervened = res.intervention_norm > options.intervention_eps;
  return res;
}

FilterResult FilterAction(const koopman::KoopmanModel& model,
                          const std::vector<barrier::LiftedBarrier>& barriers,
                          const Vec& z, const Vec& u_nom, const Box& box,
                          const FilterOptions& options) {
  return FilterRows(AssembleConstraints(model, barriers, z), u_nom, box, options);
}

std::vector<RegimeReport> ClassifyRegime(const std::vector<ConstraintRow>& rows,
                                         const Box& box) {
  std::vector<RegimeReport> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    RegimeReport r;
    if (row.infinite || row.b > MaxOverBox(row.a, box)) {
      r.regime = Regime::kInfeasibleProneness;
    } else if (row.b <= MinOverBox(row.a, box)) {
      r.regime = Regime::kTriviallySatisfied;
      r.unsafe = row.h < 0.0;
    }
    out.push_back(r);
  }
  return out;
}

double CbfPenalty(const std::vector<ConstraintRow>& rows, const Vec& u) {
  double total = 0.0;
  for (const auto& row : rows) {
    if (row.infinite) continue;
    const double gap = std::max(0.0, row.b - row.a.dot(u));
    total += gap * gap;
  }
  return total;
}

Vec CbfPenaltyGradient(const std::vector<ConstraintRow>& rows, const Vec& u) {
  Vec g = Vec::Zero(u.size());
  for (const auto& row : rows) {
    if (row.infinite) continue;
    const double gap = std::max(0.0, row.b - row.a.dot(u));
    if (gap > 0.0) g -= 2.0 * gap * row.a;
  }
  return g;
}

FilterTraceWriter::FilterTraceWriter(std::ostream& out,
                                     const std::vector<std::string>& labels)
    : out_(out), num_rows_(labels.size()) {
  out_.precision(12);
  out_ << "step";
  for (const char* prefix : {"h_", "b_", "xi_"}) {
    for (const auto& l : labels) out_ << ',' << prefix << l;
  }
  out_ << ",certificate,intervention_norm\n";
}

void FilterTraceWriter::Write(long step, const FilterResult& result) {
  KCBF_REQUIRE(result.rows.size() == num_rows_, ErrorCode::kInvalidArgument,
               "trace row count changed");
  out_ << step;
  for (const auto& r : result.rows) out_ << ',' << r.h;
  for (const auto& r : result.rows) out_ << ',' << r.b;
  for (Eigen::Index j = 0; j < result.xi.size(); ++j) out_ << ',' << result.xi(j);
  out_ << ',' << ToString(result.certificate) << ',' << result.intervention_norm
       << '\n';
}

}  // namespace kcbf::filter
