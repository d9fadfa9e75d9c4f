#include "numerics/qp.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>

#include "common/error.hpp"

namespace kcbf::numerics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One inequality nᵀy >= b in the scaled coordinates y = sqrt(H) x.
struct Row {
  Vec normal;
  double offset;
  int id;  // index in the public numbering (affine, lower, upper)
};

std::vector<Row> ScaledRows(const QpProblem& p, const Vec& inv_sqrt_h) {
  const auto n = p.num_vars();
  const auto m = p.num_rows();
  std::vector<Row> rows;
  rows.reserve(static_cast<size_t>(m + 2 * n));
  for (Eigen::Index k = 0; k < m; ++k) {
    rows.push_back({p.ineq_normals.row(k).transpose().cwiseProduct(inv_sqrt_h),
                    p.ineq_offsets(k), static_cast<int>(k)});
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(p.lower_bounds(i))) {
      Vec e = Vec::Zero(n);
      e(i) = inv_sqrt_h(i);
      rows.push_back({e, p.lower_bounds(i), static_cast<int>(m + i)});
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(p.upper_bounds(i))) {
      Vec e = Vec::Zero(n);
      e(i) = -inv_sqrt_h(i);
      rows.push_back({e, -p.upper_bounds(i), static_cast<int>(m + n + i)});
    }
  }
  return rows;
}

// Equality-constrained re-solve on the final working set. Removes the
// accumulated round-off of the rank-one multiplier updates.
void Polish(const QpProblem& p, const std::vector<Row>& rows,
            const std::vector<int>& working, Vec& x, Vec& mu) {
  const auto n = p.num_vars();
  const auto q = static_cast<Eigen::Index>(working.size());
  const Vec inv_h = p.hessian_diag.cwiseInverse();
  if (q == 0) {
    x = -p.linear_term.cwiseProduct(inv_h);
    return;
  }
  // Unscaled normals: a = sqrt(h) ∘ n_scaled.
  const Vec sqrt_h = p.hessian_diag.cwiseSqrt();
  Mat N(n, q);
  Vec b(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const Row& r = rows[static_cast<size_t>(working[static_cast<size_t>(j)])];
    N.col(j) = r.normal.cwiseProduct(sqrt_h);
    b(j) = r.offset;
  }
  const Mat HinvN = inv_h.asDiagonal() * N;
  const Mat S = N.transpose() * HinvN;
  const Vec rhs = b + HinvN.transpose() * p.linear_term;
  Eigen::ColPivHouseholderQR<Mat> qr(S);
  if (qr.rank() < q) return;  // keep the unpolished iterate
  const Vec mu_new = qr.solve(rhs);
  if ((mu_new.array() < 0.0).any()) return;
  mu = mu_new;
  x = HinvN * mu - p.linear_term.cwiseProduct(inv_h);
}

}  // namespace

QpProblem QpProblem::Unconstrained(const Vec& hessian_diag,
                                   const Vec& linear_term) {
  const auto n = hessian_diag.size();
  return {hessian_diag,
          linear_term,
          Mat(0, n),
          Vec(0),
          Vec::Constant(n, -kInf),
          Vec::Constant(n, kInf)};
}

void QpProblem::Validate() const {
  const auto n = num_vars();
  KCBF_REQUIRE(n >= 1, ErrorCode::kInvalidArgument, "QP has no variables");
  KCBF_REQUIRE((hessian_diag.array() > 0.0).all() && hessian_diag.allFinite(),
               ErrorCode::kInvalidArgument,
               "QP hessian diagonal must be strictly positive and finite");
  KCBF_REQUIRE(linear_term.size() == n && lower_bounds.size() == n &&
                   upper_bounds.size() == n,
               ErrorCode::kInvalidArgument, "QP vector sizes disagree");
  KCBF_REQUIRE(ineq_normals.cols() == n || ineq_normals.rows() == 0,
               ErrorCode::kInvalidArgument,
               "QP constraint rows must have the decision dimension");
  KCBF_REQUIRE(ineq_offsets.size() == ineq_normals.rows(),
               ErrorCode::kInvalidArgument,
               "QP constraint offsets and rows disagree");
  KCBF_REQUIRE((lower_bounds.array() <= upper_bounds.array()).all(),
               ErrorCode::kInvalidArgument, "QP box has lower > upper");
  KCBF_REQUIRE(linear_term.allFinite() && ineq_offsets.allFinite() &&
                   (ineq_normals.rows() == 0 || ineq_normals.allFinite()),
               ErrorCode::kInvalidArgument, "QP data must be finite");
}

double QpObjective(const QpProblem& p, const Vec& x) {
  return 0.5 * x.dot(p.hessian_diag.cwiseProduct(x)) + p.linear_term.dot(x);
}

double KktResidual(const QpProblem& p, const Vec& x, const Vec& duals,
                   const Vec& lower_duals, const Vec& upper_duals) {
  const auto n = p.num_vars();
  const auto m = p.num_rows();
  Vec stationarity = p.hessian_diag.cwiseProduct(x) + p.linear_term -
                     lower_duals + upper_duals;
  if (m > 0) stationarity -= p.ineq_normals.transpose() * duals;
  double res = stationarity.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < m; ++k) {
    const double slack = p.ineq_normals.row(k).dot(x) - p.ineq_offsets(k);
    res = std::max({res, -slack, -duals(k), std::abs(duals(k) * slack)});
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    res = std::max({res, -lower_duals(i), -upper_duals(i)});
    if (std::isfinite(p.lower_bounds(i))) {
      const double s = x(i) - p.lower_bounds(i);
      res = std::max({res, -s, std::abs(lower_duals(i) * s)});
    } else {
      res = std::max(res, std::abs(lower_duals(i)));
    }
    if (std::isfinite(p.upper_bounds(i))) {
      const double s = p.upper_bounds(i) - x(i);
      res = std::max({res, -s, std::abs(upper_duals(i) * s)});
    } else {
      res = std::max(res, std::abs(upper_duals(i)));
    }
  }
  return res;
}

QpSolution SolveQp(const QpProblem& problem, const QpOptions& options) {
  problem.Validate();
  const auto n = problem.num_vars();
  const auto m = problem.num_rows();

  const Vec sqrt_h = problem.hessian_diag.cwiseSqrt();
  const Vec inv_sqrt_h = sqrt_h.cwiseInverse();
  const std::vector<Row> rows = ScaledRows(problem, inv_sqrt_h);
  const auto num_rows = static_cast<int>(rows.size());
  const int max_iter = options.max_iterations > 0
                           ? options.max_iterations
                           : 50 * (num_rows + static_cast<int>(n) + 1);

  // Unconstrained minimizer of ½‖y‖² + (g/sqrt h)ᵀ y.
  Vec y = -problem.linear_term.cwiseProduct(inv_sqrt_h);
  std::vector<int> working;  // indices into rows
  std::vector<double> mu;
  std::vector<char> in_working(static_cast<size_t>(num_rows), 0);

  auto violation = [&](int k) {
    const Row& r = rows[static_cast<size_t>(k)];
    return r.normal.dot(y) - r.offset;
  };
  auto violation_tol = [&](int k) {
    const Row& r = rows[static_cast<size_t>(k)];
    return 1e-13 * (1.0 + std::abs(r.offset) + r.normal.norm() * y.norm());
  };

  int iterations = 0;
  while (true) {
    // Choose the entering constraint.
    int p = -1;
    double worst = 0.0;
    for (int k = 0; k < num_rows; ++k) {
      if (in_working[static_cast<size_t>(k)]) continue;
      const double s = violation(k);
      if (s >= -violation_tol(k)) continue;
      const double score = s / std::max(rows[static_cast<size_t>(k)].normal.norm(), 1e-300);
      if (options.pivot == PivotRule::kFirstViolated) {
        p = k;
        break;
      }
      if (options.pivot == PivotRule::kLastViolated) {
        p = k;
        continue;
      }
      if (p < 0 || score < worst) {
        p = k;
        worst = score;
      }
    }
    if (p < 0) break;

    double mu_p = 0.0;
    const Vec& np = rows[static_cast<size_t>(p)].normal;
    while (true) {
      if (++iterations > max_iter) {
        Throw(ErrorCode::kMaxIterations,
              "QP active-set exceeded " + std::to_string(max_iter) +
                  " iterations");
      }
      const auto q = static_cast<Eigen::Index>(working.size());
      Vec r(q);
      Vec z = np;
      if (q > 0) {
        Mat N(n, q);
        for (Eigen::Index j = 0; j < q; ++j) {
          N.col(j) = rows[static_cast<size_t>(working[static_cast<size_t>(j)])].normal;
        }
        r = N.colPivHouseholderQr().solve(np);
        z = np - N * r;
      }

      double t1 = kInf;
      int drop = -1;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (r(j) > 1e-14) {
          const double ratio = mu[static_cast<size_t>(j)] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop = static_cast<int>(j);
          }
        }
      }
      double t2 = kInf;
      const double zz = z.squaredNorm();
      if (zz > 1e-20 * np.squaredNorm()) {
        t2 = -violation(p) / z.dot(np);
      }

      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        Throw(ErrorCode::kInfeasible,
              "QP constraints are infeasible (constraint " +
                  std::to_string(rows[static_cast<size_t>(p)].id) +
                  " cannot be satisfied)");
      }
      const double t = std::min(t1, t2);
      if (std::isfinite(t2)) y += t * z;
      for (Eigen::Index j = 0; j < q; ++j) {
        mu[static_cast<size_t>(j)] -= t * r(j);
      }
      mu_p += t;

      if (t2 <= t1) {
        working.push_back(p);
        mu.push_back(mu_p);
        in_working[static_cast<size_t>(p)] = 1;
        break;
      }
      in_working[static_cast<size_t>(working[static_cast<size_t>(drop)])] = 0;
      working.erase(working.begin() + drop);
      mu.erase(mu.begin() + drop);
    }
  }

  Vec x = y.cwiseProduct(inv_sqrt_h);
  Vec mu_vec = Eigen::Map<const Vec>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  Polish(problem, rows, working, x, mu_vec);

  QpSolution sol;
  sol.iterations = iterations;
  sol.x = x;
  sol.duals = Vec::Zero(m);
  sol.lower_duals = Vec::Zero(n);
  sol.upper_duals = Vec::Zero(n);
  for (size_t j = 0; j < working.size(); ++j) {
    const int id = rows[static_cast<size_t>(working[j])].id;
    const double value = std::max(0.0, mu_vec(static_cast<Eigen::Index>(j)));
    if (id < m) {
      sol.duals(id) = value;
    } else if (id < m + n) {
      sol.lower_duals(id - m) = value;
    } else {
      sol.upper_duals(id - m - n) = value;
    }
  }
  for (const Row& r : rows) {
    const double slack = r.normal.dot(x.cwiseProduct(sqrt_h)) - r.offset;
    if (std::abs(slack) <= options.tol) sol.active_set.push_back(r.id);
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.kkt_residual =
      KktResidual(problem, sol.x, sol.duals, sol.lower_duals, sol.upper_duals);
  // Relative to the magnitude of the data and the multipliers.
  double scale = 1.0;
  scale = std::max(scale, problem.hessian_diag.cwiseProduct(sol.x).cwiseAbs().maxCoeff());
  scale = std::max(scale, problem.linear_term.cwiseAbs().maxCoeff());
  if (m > 0) {
    scale = std::max(scale, problem.ineq_offsets.cwiseAbs().maxCoeff());
    scale = std::max(scale, sol.duals.maxCoeff() * (1.0 + sol.x.cwiseAbs().maxCoeff()));
  }
  if (sol.kkt_residual > options.tol * scale) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.3g (scale %.3g)", sol.kkt_residual, scale);
    Throw(ErrorCode::kInternal,
          std::string("QP certificate failed: KKT residual ") + buf +
              " exceeds tolerance");
  }
  return sol;
}

}  // namespace kcbf::numerics
