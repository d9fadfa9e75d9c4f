#include "koopman/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "common/error.hpp"

namespace kcbf::koopman {
namespace {

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

int Nearest(const Vec& y, const std::vector<Vec>& centers, double* dist2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < centers.size(); ++j) {
    const double d = (y - centers[j]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

std::vector<double> Bandwidths(const std::vector<Vec>& centers,
                               const std::vector<Vec>& data) {
  const size_t m = centers.size();
  std::vector<double> out(m, 1.0);
  if (m == 0) return out;

  std::vector<double> all_pairs;
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      all_pairs.push_back((centers[i] - centers[j]).norm());
    }
  }
  double global = Median(all_pairs);
  if (m == 1) {
    std::vector<double> d;
    d.reserve(data.size());
    for (const Vec& y : data) d.push_back((y - centers[0]).norm());
    global = Median(std::move(d));
  }
  if (!(global > 0.0)) global = 1.0;

  for (size_t i = 0; i < m; ++i) {
    double bw = global;
    if (m >= 6) {
      std::vector<double> d;
      d.reserve(m - 1);
      for (size_t j = 0; j < m; ++j) {
        if (j != i) d.push_back((centers[i] - centers[j]).norm());
      }
      std::partial_sort(d.begin(), d.begin() + 5, d.end());
      d.resize(5);
      bw = Median(std::move(d));
    }
    out[i] = bw > 0.0 ? bw : global;
  }
  return out;
}

}  // namespace

Dictionary::Dictionary(int state_dim) : state_dim_(state_dim) {
  KCBF_REQUIRE(state_dim >= 1, ErrorCode::kInvalidArgument,
               "dictionary state dimension must be positive");
}

Dictionary::Dictionary(int state_dim, std::vector<Vec> centers,
                       std::vector<double> bandwidths)
    : state_dim_(state_dim),
      centers_(std::move(centers)),
      bandwidths_(std::move(bandwidths)) {
  KCBF_REQUIRE(state_dim >= 1, ErrorCode::kInvalidArgument,
               "dictionary state dimension must be positive");
  KCBF_REQUIRE(centers_.size() == bandwidths_.size(),
               ErrorCode::kInvalidArgument,
               "one bandwidth per RBF center is required");
  for (size_t j = 0; j < centers_.size(); ++j) {
    KCBF_REQUIRE(centers_[j].size() == state_dim, ErrorCode::kInvalidArgument,
                 "RBF center " + std::to_string(j) + " has wrong dimension");
    KCBF_REQUIRE(bandwidths_[j] > 0.0 && std::isfinite(bandwidths_[j]),
                 ErrorCode::kInvalidArgument,
                 "RBF bandwidths must be positive and finite");
  }
}

Vec Dictionary::Lift(const Vec& y) const {
  KCBF_REQUIRE(y.size() == state_dim_, ErrorCode::kInvalidArgument,
               "lift: expected state of dimension " + std::to_string(state_dim_) +
                   ", got " + std::to_string(y.size()));
  Vec z(lifted_dim());
  z.head(state_dim_) = y;
  for (size_t j = 0; j < centers_.size(); ++j) {
    const double s = bandwidths_[j];
    z(state_dim_ + static_cast<Eigen::Index>(j)) =
        std::exp(-(y - centers_[j]).squaredNorm() / (2.0 * s * s));
  }
  return z;
}

Mat Dictionary::LiftColumns(const Mat& ys) const {
  Mat z(lifted_dim(), ys.cols());
  for (Eigen::Index i = 0; i < ys.cols(); ++i) z.col(i) = Lift(ys.col(i));
  return z;
}

double WithinClusterSumOfSquares(const std::vector<Vec>& data,
                                 const std::vector<Vec>& centers) {
  double total = 0.0;
  for (const Vec& y : data) {
    double d2 = 0.0;
    Nearest(y, centers, &d2);
    total += d2;
  }
  return total;
}

Dictionary FitCenters(const std::vector<Vec>& data, int num_centers,
                      std::uint64_t seed, int max_lloyd_iterations) {
  KCBF_REQUIRE(!data.empty(), ErrorCode::kInvalidArgument,
               "k-means needs at least one data point");
  KCBF_REQUIRE(num_centers >= 0 &&
                   static_cast<size_t>(num_centers) <= data.size(),
               ErrorCode::kInvalidArgument,
               "number of centers must be in [0, |data|]");
  const auto dim = static_cast<int>(data.front().size());
  for (const Vec& y : data) {
    KCBF_REQUIRE(y.size() == dim, ErrorCode::kInvalidArgument,
                 "k-means data have inconsistent dimensions");
  }
  if (num_centers == 0) return Dictionary(dim);

  if (num_centers > 1) {
    const bool all_same = std::all_of(data.begin(), data.end(), [&](const Vec& y) {
      return (y.array() == data.front().array()).all();
    });
    KCBF_REQUIRE(!all_same, ErrorCode::kDegenerateData,
                 "all data points coincide; cannot place " +
                     std::to_string(num_centers) + " distinct centers");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> centers;
  centers.reserve(static_cast<size_t>(num_centers));
  centers.push_back(data[static_cast<size_t>(unit(rng) * static_cast<double>(data.size())) %
                         data.size()]);

  std::vector<double> d2(data.size());
  for (size_t i = 0; i < data.size(); ++i) d2[i] = (data[i] - centers[0]).squaredNorm();
  while (static_cast<int>(centers.size()) < num_centers) {
    double total = 0.0;
    for (double v : d2) total += v;
    KCBF_REQUIRE(total > 0.0, ErrorCode::kDegenerateData,
                 "fewer distinct data points than requested centers (" +
                     std::to_string(num_centers) + ")");
    const double target = unit(rng) * total;
    double acc = 0.0;
    size_t pick = data.size() - 1;
    for (size_t i = 0; i < data.size(); ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    while (d2[pick] == 0.0) --pick;  // land on a point not yet chosen
    centers.push_back(data[pick]);
    for (size_t i = 0; i < data.size(); ++i) {
      d2[i] = std::min(d2[i], (data[i] - centers.back()).squaredNorm());
    }
  }

  std::vector<int> assignment(data.size(), -1);
  for (int it = 0; it < max_lloyd_iterations; ++it) {
    bool changed = false;
    for (size_t i = 0; i < data.size(); ++i) {
      const int c = Nearest(data[i], centers, nullptr);
      if (c != assignment[i]) {
        assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Vec> sums(centers.size(), Vec::Zero(dim));
    std::vector<int> counts(centers.size(), 0);
    for (size_t i = 0; i < data.size(); ++i) {
      sums[static_cast<size_t>(assignment[i])] += data[i];
      ++counts[static_cast<size_t>(assignment[i])];
    }
    for (size_t j = 0; j < centers.size(); ++j) {
      if (counts[j] > 0) centers[j] = sums[j] / counts[j];
    }
  }

  std::vector<double> bw = Bandwidths(centers, data);
  return Dictionary(dim, std::move(centers), std::move(bw));
}

}  // namespace kcbf::koopman
