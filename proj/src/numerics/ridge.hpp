#pragma once

#include "common/types.hpp"

namespace kcbf::numerics {

// Solves G = T Φᵀ (Φ Φᵀ + λI)⁻¹ for the ridge regression T ≈ G Φ.
//
// `features` is (feature_dim x samples), `targets` is (target_dim x samples).
// The Gram matrix is factored with LDLᵀ; no explicit inverse is formed.
// Throws SingularGram if λ == 0 and the Gram matrix is numerically rank
// deficient.
Mat SolveRidge(const Mat& features, const Mat& targets, double lambda);

// Σ‖T − GΦ‖² + λ‖G‖_F², the objective SolveRidge minimizes.
double RidgeObjective(const Mat& features, const Mat& targets, const Mat& G,
                      double lambda);

}  // namespace kcbf::numerics
