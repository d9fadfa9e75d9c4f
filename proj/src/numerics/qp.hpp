#pragma once

#include <vector>

#include "common/types.hpp"

namespace kcbf::numerics {

// minimize   ½ xᵀ diag(hessian_diag) x + linear_termᵀ x
// subject to ineq_normals.row(k) · x >= ineq_offsets(k)
//            lower_bounds <= x <= upper_bounds   (entries may be ±inf)
struct QpProblem {
  Vec hessian_diag;
  Vec linear_term;
  Mat ineq_normals;  // m x n
  Vec ineq_offsets;  // m
  Vec lower_bounds;
  Vec upper_bounds;

  Eigen::Index num_vars() const { return hessian_diag.size(); }
  Eigen::Index num_rows() const { return ineq_normals.rows(); }

  // Unconstrained box, no rows.
  static QpProblem Unconstrained(const Vec& hessian_diag, const Vec& linear_term);

  // Throws InvalidArgument if any invariant is broken.
  void Validate() const;
};

enum class QpStatus { kOptimal };

// Order in which violated constraints enter the working set. The minimizer
// is unique, so every rule must land on the same x.
enum class PivotRule { kMostViolated, kFirstViolated, kLastViolated };

struct QpOptions {
  double tol = 1e-8;
  PivotRule pivot = PivotRule::kMostViolated;
  int max_iterations = 0;  // 0 = automatic
};

struct QpSolution {
  QpStatus status = QpStatus::kOptimal;
  Vec x;
  // Constraint indices that are tight within tol. Affine rows are numbered
  // 0..m-1, lower bounds m..m+n-1, upper bounds m+n..m+2n-1.
  std::vector<int> active_set;
  Vec duals;        // per affine row, >= 0
  Vec lower_duals;  // per variable, >= 0
  Vec upper_duals;  // per variable, >= 0
  double kkt_residual = 0.0;
  int iterations = 0;
};

// Dual active-set solve (Goldfarb–Idnani) on the diagonally scaled problem,
// followed by an equality-constrained polish on the final working set.
// Throws Infeasible when the constraints admit no point, MaxIterations if
// the working set cycles.
QpSolution SolveQp(const QpProblem& problem, const QpOptions& options = {});

// Max-norm of the KKT violation of (x, duals) for `problem`: stationarity,
// primal feasibility, dual sign and complementarity.
double KktResidual(const QpProblem& problem, const Vec& x, const Vec& duals,
                   const Vec& lower_duals, const Vec& upper_duals);

double QpObjective(const QpProblem& problem, const Vec& x);

}  // namespace kcbf::numerics
