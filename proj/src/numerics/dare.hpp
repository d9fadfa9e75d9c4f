#pragma once

#include "common/types.hpp"

namespace kcbf::numerics {

struct DareResult {
  Mat P;  // stabilizing solution
  Mat K;  // u = -K x
  int iterations = 0;
};

// Fixed-point (value) iteration on
//   P = Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA
// started from P = Q, until successive iterates differ by < tol in max norm.
// Throws NoConvergence after max_iterations.
DareResult SolveDare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                     double tol = 1e-10, int max_iterations = 200000);

// Largest eigenvalue modulus.
double SpectralRadius(const Mat& M);

}  // namespace kcbf::numerics
