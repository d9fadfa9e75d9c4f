#include "numerics/dare.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "common/error.hpp"

namespace kcbf::numerics {

DareResult SolveDare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                     double tol, int max_iterations) {
  const auto n = A.rows();
  const auto m = B.cols();
  KCBF_REQUIRE(A.cols() == n && B.rows() == n && Q.rows() == n &&
                   Q.cols() == n && R.rows() == m && R.cols() == m,
               ErrorCode::kInvalidArgument, "DARE dimensions disagree");
  Eigen::LLT<Mat> r_llt(R);
  KCBF_REQUIRE(r_llt.info() == Eigen::Success, ErrorCode::kInvalidArgument,
               "DARE requires R positive definite");

  Mat P = Q;
  for (int it = 1; it <= max_iterations; ++it) {
    const Mat BtP = B.transpose() * P;
    const Mat S = R + BtP * B;
    const Mat K = S.llt().solve(BtP * A);
    Mat next = Q + A.transpose() * P * A - (BtP * A).transpose() * K;
    next = 0.5 * (next + next.transpose());
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (!P.allFinite()) break;
    if (diff < tol) {
      const Mat BtPf = B.transpose() * P;
      DareResult out;
      out.K = (R + BtPf * B).llt().solve(BtPf * A);
      out.P = P;
      out.iterations = it;
      return out;
    }
  }
  Throw(ErrorCode::kNoConvergence,
        "Riccati iteration did not converge within " +
            std::to_string(max_iterations) + " iterations");
}

double SpectralRadius(const Mat& M) {
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace kcbf::numerics
