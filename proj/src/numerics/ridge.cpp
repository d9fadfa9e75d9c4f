#include "numerics/ridge.hpp"

#include <string>

#include "common/error.hpp"

namespace kcbf::numerics {

Mat SolveRidge(const Mat& features, const Mat& targets, double lambda) {
  KCBF_REQUIRE(lambda >= 0.0, ErrorCode::kInvalidArgument,
               "ridge lambda must be nonnegative");
  KCBF_REQUIRE(features.cols() >= 1, ErrorCode::kInvalidArgument,
               "ridge regression needs at least one sample");
  KCBF_REQUIRE(features.cols() == targets.cols(), ErrorCode::kInvalidArgument,
               "features and targets disagree on sample count (" +
                   std::to_string(features.cols()) + " vs " +
                   std::to_string(targets.cols()) + ")");

  const Eigen::Index p = features.rows();
  Mat gram = features * features.transpose();
  gram.diagonal().array() += lambda;
  const Mat rhs = features * targets.transpose();  // p x target_dim

  if (lambda == 0.0) {
    // Rank check via a pivoted decomposition; LDLᵀ alone would happily
    // produce garbage on a singular Gram.
    Eigen::ColPivHouseholderQR<Mat> qr(gram);
    const double scale = gram.cwiseAbs().maxCoeff();
    qr.setThreshold(1e-12);
    if (scale == 0.0 || qr.rank() < p) {
      Throw(ErrorCode::kSingularGram,
            "Gram matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                " of " + std::to_string(p) + ") and lambda is zero");
    }
  }

  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    Throw(ErrorCode::kSingularGram, "LDLT factorization of the Gram failed");
  }
  const Mat solution = ldlt.solve(rhs);  // p x target_dim
  return solution.transpose();
}

double RidgeObjective(const Mat& features, const Mat& targets, const Mat& G,
                      double lambda) {
  return (targets - G * features).squaredNorm() + lambda * G.squaredNorm();
}

}  // namespace kcbf::numerics
