#include "agent/mlp.hpp"

#include <cmath>

#include "common/error.hpp"

namespace kcbf::agent {

Mlp::Mlp(std::vector<int> sizes, std::mt19937_64& rng) : sizes_(std::move(sizes)) {
  KCBF_REQUIRE(sizes_.size() >= 2, ErrorCode::kInvalidArgument,
               "network needs an input and an output layer");
  for (int s : sizes_) {
    KCBF_REQUIRE(s >= 1, ErrorCode::kInvalidArgument, "layer sizes must be positive");
  }
  ComputeOffsets();
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const Eigen::Index count = static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
    for (Eigen::Index k = 0; k < count; ++k) params_(offsets_[l] + k) = u(rng);
  }
}

void Mlp::ComputeOffsets() {
  offsets_.clear();
  Eigen::Index off = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Vec::Zero(off);
}

void Mlp::set_params(const Vec& p) {
  KCBF_REQUIRE(p.size() == params_.size(), ErrorCode::kInvalidArgument,
               "parameter vector has the wrong size");
  params_ = p;
}

Mat Mlp::Forward(const Mat& x, Cache* cache) const {
  KCBF_REQUIRE(x.rows() == input_dim(), ErrorCode::kInvalidArgument,
               "network input has the wrong dimension");
  const size_t layers = sizes_.size() - 1;
  if (cache) {
    cache->activations.resize(layers + 1);
    cache->activations[0] = x;
  }
  Mat a = x;
  for (size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    Eigen::Map<const Mat> W(params_.data() + offsets_[l], out, in);
    Eigen::Map<const Vec> b(params_.data() + offsets_[l] + out * in, out);
    Mat next = W * a;
    next.colwise() += b;
    // tanh through the vectorized exponential; saturates cleanly at ±1.
    if (l + 1 < layers) next = 1.0 - 2.0 / ((2.0 * next.array()).exp() + 1.0);
    a = std::move(next);
    if (cache) cache->activations[l + 1] = a;
  }
  return a;
}

Mat Mlp::Backward(const Cache& cache, const Mat& d_output, Vec* grad) const {
  const size_t layers = sizes_.size() - 1;
  KCBF_REQUIRE(cache.activations.size() == layers + 1, ErrorCode::kInvalidArgument,
               "backward needs the forward cache");
  if (grad) {
    KCBF_REQUIRE(grad->size() == params_.size(), ErrorCode::kInvalidArgument,
                 "gradient buffer has the wrong size");
  }
  Mat delta = d_output;  // dL/d(pre-activation) of the current layer
  for (size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const Mat& a_in = cache.activations[l];
    if (grad) {
      Eigen::Map<Mat> gW(grad->data() + offsets_[l], out, in);
      Eigen::Map<Vec> gb(grad->data() + offsets_[l] + out * in, out);
      gW.noalias() += delta * a_in.transpose();
      gb += delta.rowwise().sum();
    }
    Eigen::Map<const Mat> W(params_.data() + offsets_[l], out, in);
    Mat d_in = W.transpose() * delta;
    if (l > 0) {
      d_in.array() *= 1.0 - a_in.array().square();
    }
    delta = std::move(d_in);
  }
  return delta;
}

Json Mlp::ToJson() const {
  return {{"sizes", sizes_}, {"params", VecToJson(params_)}};
}

Mlp Mlp::FromJson(const Json& j) {
  Mlp m;
  m.sizes_ = j.at("sizes").get<std::vector<int>>();
  m.ComputeOffsets();
  m.set_params(VecFromJson(j.at("params")));
  return m;
}

Adam::Adam(Eigen::Index n, Options options)
    : opt_(options), m_(Vec::Zero(n)), v_(Vec::Zero(n)) {}

void Adam::Step(Vec& params, const Vec& grad) {
  KCBF_REQUIRE(grad.size() == params.size() && grad.size() == v_.size(),
               ErrorCode::kInvalidArgument, "optimizer size mismatch");
  ++t_;
  const double t = static_cast<double>(t_);
  v_ = opt_.beta2 * v_ + (1.0 - opt_.beta2) * grad.cwiseAbs2();
  const double v_corr = 1.0 - std::pow(opt_.beta2, t);
  if (opt_.beta1 > 0.0) {
    m_ = opt_.beta1 * m_ + (1.0 - opt_.beta1) * grad;
    const double m_corr = 1.0 - std::pow(opt_.beta1, t);
    params.array() -= opt_.lr * (m_.array() / m_corr) /
                      ((v_.array() / v_corr).sqrt() + opt_.eps);
  } else {
    params.array() -= opt_.lr * grad.array() / ((v_.array() / v_corr).sqrt() + opt_.eps);
  }
}

Json Adam::ToJson() const {
  return {{"lr", opt_.lr},       {"beta1", opt_.beta1}, {"beta2", opt_.beta2},
          {"eps", opt_.eps},     {"t", t_},             {"m", VecToJson(m_)},
          {"v", VecToJson(v_)}};
}

Adam Adam::FromJson(const Json& j) {
  Adam a;
  a.opt_ = {j.at("lr").get<double>(), j.at("beta1").get<double>(),
            j.at("beta2").get<double>(), j.at("eps").get<double>()};
  a.t_ = j.at("t").get<long>();
  a.m_ = VecFromJson(j.at("m"));
  a.v_ = VecFromJson(j.at("v"));
  return a;
}

}  // namespace kcbf::agent
