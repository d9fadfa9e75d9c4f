#pragma once

// Brute-force references and random problems for the QP solver. Shares
// nothing with numerics/qp.cpp beyond the problem struct.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "numerics/qp.hpp"

namespace kcbf::testing {

struct DenseRow {
  Vec a;
  double b;
};

inline std::vector<DenseRow> AllRows(const numerics::QpProblem& p) {
  std::vector<DenseRow> rows;
  const auto n = p.num_vars();
  for (Eigen::Index k = 0; k < p.num_rows(); ++k) {
    rows.push_back({p.ineq_normals.row(k).transpose(), p.ineq_offsets(k)});
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(p.lower_bounds(i))) {
      Vec e = Vec::Zero(n);
      e(i) = 1.0;
      rows.push_back({e, p.lower_bounds(i)});
    }
    if (std::isfinite(p.upper_bounds(i))) {
      Vec e = Vec::Zero(n);
      e(i) = -1.0;
      rows.push_back({e, -p.upper_bounds(i)});
    }
  }
  return rows;
}

inline bool Feasible(const std::vector<DenseRow>& rows, const Vec& x,
                     double tol) {
  for (const auto& r : rows) {
    if (r.a.dot(x) < r.b - tol) return false;
  }
  return true;
}

// Exhaustive working-set enumeration: every subset of at most n rows is
// solved as an equality-constrained QP through its full KKT matrix; the
// cheapest feasible candidate is the minimizer.
inline std::optional<Vec> EnumerationMinimizer(const numerics::QpProblem& p) {
  const auto rows = AllRows(p);
  const auto n = p.num_vars();
  const int total = static_cast<int>(rows.size());
  std::optional<Vec> best;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> subset;

  std::function<void(int)> recurse = [&](int start) {
    const auto q = static_cast<Eigen::Index>(subset.size());
    Mat kkt = Mat::Zero(n + q, n + q);
    Vec rhs = Vec::Zero(n + q);
    kkt.topLeftCorner(n, n) = p.hessian_diag.asDiagonal();
    rhs.head(n) = -p.linear_term;
    for (Eigen::Index j = 0; j < q; ++j) {
      const auto& r = rows[static_cast<size_t>(subset[static_cast<size_t>(j)])];
      kkt.block(0, n + j, n, 1) = -r.a;
      kkt.block(n + j, 0, 1, n) = r.a.transpose();
      rhs(n + j) = r.b;
    }
    Eigen::FullPivLU<Mat> lu(kkt);
    if (lu.isInvertible()) {
      const Vec sol = lu.solve(kkt * Vec::Zero(n + q) + rhs);
      const Vec x = sol.head(n);
      if (Feasible(rows, x, 1e-10)) {
        const double obj = numerics::QpObjective(p, x);
        if (obj < best_obj) {
          best_obj = obj;
          best = x;
        }
      }
    }
    if (q == n) return;
    for (int k = start; k < total; ++k) {
      subset.push_back(k);
      recurse(k + 1);
      subset.pop_back();
    }
  };
  recurse(0);
  return best;
}

// Grid search over the (finite) box at `step`, followed by nested local
// refinement around the incumbent. Only practical for n <= 2.
inline std::optional<Vec> GridMinimizer(const numerics::QpProblem& p,
                                        double step = 1e-3,
                                        int refinements = 4) {
  const auto rows = AllRows(p);
  const auto n = p.num_vars();
  std::optional<Vec> best;
  double best_obj = std::numeric_limits<double>::infinity();

  auto scan = [&](const Vec& lo, const Vec& hi, double h) {
    std::vector<long> counts(static_cast<size_t>(n));
    long total = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      counts[static_cast<size_t>(i)] =
          static_cast<long>(std::floor((hi(i) - lo(i)) / h + 1e-9)) + 1;
      total *= counts[static_cast<size_t>(i)];
    }
    Vec x(n);
    for (long idx = 0; idx < total; ++idx) {
      long rem = idx;
      for (Eigen::Index i = 0; i < n; ++i) {
        const long c = counts[static_cast<size_t>(i)];
        x(i) = std::min(hi(i), lo(i) + h * static_cast<double>(rem % c));
        rem /= c;
      }
      if (!Feasible(rows, x, 0.0)) continue;
      const double obj = numerics::QpObjective(p, x);
      if (obj < best_obj) {
        best_obj = obj;
        best = x;
      }
    }
  };

  scan(p.lower_bounds, p.upper_bounds, step);
  double h = step;
  for (int level = 0; level < refinements && best; ++level) {
    const Vec center = *best;
    Vec lo = (center.array() - 2.0 * h).max(p.lower_bounds.array());
    Vec hi = (center.array() + 2.0 * h).min(p.upper_bounds.array());
    h /= 10.0;
    scan(lo, hi, h);
  }
  return best;
}

// Random feasible problem: rows are built to hold strictly at a random
// interior point.
inline numerics::QpProblem RandomProblem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 4), md(0, 6);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 3.0),
      slack(0.0, 0.5);
  std::normal_distribution<double> normal;
  const int n = nd(rng);
  const int m = md(rng);
  Vec h(n), g(n), x0(n);
  for (int i = 0; i < n; ++i) {
    h(i) = pos(rng);
    g(i) = 2.0 * u(rng) * h(i);
    x0(i) = 0.8 * u(rng);
  }
  numerics::QpProblem p = numerics::QpProblem::Unconstrained(h, g);
  p.lower_bounds.setConstant(-1.0);
  p.upper_bounds.setConstant(1.0);
  p.ineq_normals.resize(m, n);
  p.ineq_offsets.resize(m);
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < n; ++i) p.ineq_normals(k, i) = normal(rng);
    p.ineq_offsets(k) = p.ineq_normals.row(k).dot(x0) - slack(rng);
  }
  return p;
}

inline numerics::QpProblem PermuteRows(const numerics::QpProblem& p, const std::vector<int>& perm) {
  numerics::QpProblem q = p;
  for (size_t k = 0; k < perm.size(); ++k) {
    q.ineq_normals.row(static_cast<Eigen::Index>(k)) =
        p.ineq_normals.row(perm[k]);
    q.ineq_offsets(static_cast<Eigen::Index>(k)) = p.ineq_offsets(perm[k]);
  }
  return q;
}

inline double Stationarity(const numerics::QpProblem& p, const numerics::QpSolution& s) {
  Vec r = p.hessian_diag.cwiseProduct(s.x) + p.linear_term - s.lower_duals +
          s.upper_duals;
  if (p.num_rows() > 0) r -= p.ineq_normals.transpose() * s.duals;
  return r.cwiseAbs().maxCoeff();
}

}  // namespace kcbf::testing
