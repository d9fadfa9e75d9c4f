#pragma once

#include <Eigen/Dense>

namespace kcbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned actuator limits.
struct Box {
  Vec lower;
  Vec upper;

  Eigen::Index dim() const { return lower.size(); }
  bool Contains(const Vec& u) const {
    return u.size() == lower.size() && (u.array() >= lower.array()).all() &&
           (u.array() <= upper.array()).all();
  }
  Vec Clamp(const Vec& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
  Vec Center() const { return 0.5 * (lower + upper); }
  static Box Symmetric(Eigen::Index dim, double half_width) {
    return {Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
  }
};

}  // namespace kcbf
