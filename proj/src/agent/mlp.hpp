#pragma once

#include <random>
#include <vector>

#include "common/json_util.hpp"
#include "common/types.hpp"

namespace kcbf::agent {

// Fully connected network with tanh hidden layers and a linear output.
// Parameters live in one flat vector: per layer W (out x in, column-major)
// followed by b. Batches are column-stacked (dim x batch).
class Mlp {
 public:
  struct Cache {
    std::vector<Mat> activations;  // [input, hidden..., output]
  };

  Mlp() = default;
  // PyTorch-style uniform(±1/sqrt(fan_in)) initialization.
  Mlp(std::vector<int> sizes, std::mt19937_64& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Eigen::Index num_params() const { return params_.size(); }

  const Vec& params() const { return params_; }
  Vec& params() { return params_; }
  void set_params(const Vec& p);

  Mat Forward(const Mat& x, Cache* cache = nullptr) const;

  // Back-propagates dL/d(output). Adds parameter gradients into *grad when
  // given and returns dL/d(input).
  Mat Backward(const Cache& cache, const Mat& d_output, Vec* grad) const;

  Json ToJson() const;
  static Mlp FromJson(const Json& j);

 private:
  std::vector<int> sizes_;
  Vec params_;
  std::vector<Eigen::Index> offsets_;  // start of W_l in params_

  void ComputeOffsets();
};

// Adam on a flat parameter vector; beta1 = 0 gives the momentum-free form.
class Adam {
 public:
  struct Options {
    double lr = 3e-4;
    double beta1 = 0.0;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  Adam(Eigen::Index n, Options options);

  void Step(Vec& params, const Vec& grad);
  long steps() const { return t_; }

  Json ToJson() const;
  static Adam FromJson(const Json& j);

 private:
  Options opt_;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

}  // namespace kcbf::agent
