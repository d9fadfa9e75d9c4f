#pragma once

#include <cstdint>
#include <vector>

#include "common/types.hpp"

namespace kcbf::koopman {

// ψ(y) = [y; exp(−‖y−c₁‖²/2σ₁²); …; exp(−‖y−c_M‖²/2σ_M²)].
// The raw coordinates always come first so that constraints on the physical
// state stay affine in the lifted state.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(int state_dim);
  Dictionary(int state_dim, std::vector<Vec> centers, std::vector<double> bandwidths);

  int state_dim() const { return state_dim_; }
  int num_features() const { return static_cast<int>(centers_.size()); }
  int lifted_dim() const { return state_dim_ + num_features(); }
  const std::vector<Vec>& centers() const { return centers_; }
  const std::vector<double>& bandwidths() const { return bandwidths_; }

  Vec Lift(const Vec& y) const;
  // Columnwise lift of a (state_dim x N) matrix.
  Mat LiftColumns(const Mat& ys) const;

 private:
  int state_dim_ = 0;
  std::vector<Vec> centers_;
  std::vector<double> bandwidths_;
};

// Lloyd's k-means with k-means++ seeding; bandwidth per center is the median
// distance to its 5 nearest other centers (median of all center pairwise
// distances when fewer than 6 centers exist).
Dictionary FitCenters(const std::vector<Vec>& data, int num_centers,
                      std::uint64_t seed, int max_lloyd_iterations = 100);

// Within-cluster sum of squares of `data` against `centers`.
double WithinClusterSumOfSquares(const std::vector<Vec>& data,
                                 const std::vector<Vec>& centers);

}  // namespace kcbf::koopman
