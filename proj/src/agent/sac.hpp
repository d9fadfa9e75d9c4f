#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "agent/action_filter.hpp"
#include "agent/mlp.hpp"
#include "agent/replay.hpp"
#include "common/json_util.hpp"
#include "common/types.hpp"

namespace kcbf::agent {

struct SacConfig {
  int hidden_width = 64;
  int hidden_layers = 2;
  double lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 256;
  double lambda_h = 1.0;
  double init_alpha = 0.2;
  bool learn_alpha = true;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  size_t buffer_capacity = 100000;

  Json ToJson() const;
  static SacConfig FromJson(const Json& j);
};

// Reparameterized draw for a batch (columns are samples).
struct PolicySample {
  Mat u;         // action in the box
  Vec log_prob;  // log density of u, squash and rescale included
  Mat pre;       // Gaussian sample before tanh
  Mat squashed;  // tanh(pre)
  Mat std;
  Mat eps;
  Mat log_std_mask;  // 1 where log-std is inside its clamp
  Mlp::Cache cache;
};

class SquashedGaussianActor {
 public:
  SquashedGaussianActor() = default;
  SquashedGaussianActor(Mlp net, Box box, double log_std_min, double log_std_max);

  PolicySample Sample(const Mat& obs, const Mat& eps) const;
  Mat Deterministic(const Mat& obs) const;
  // Log density of given in-box actions (inverse squash).
  Vec LogProb(const Mat& obs, const Mat& u) const;
  // Adds parameter gradients of L given dL/du (nu x B) and dL/dlog_prob (B).
  void Backward(const PolicySample& s, const Mat& d_u, const Vec& d_log_prob,
                Vec* grad) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Box& box() const { return box_; }
  int action_dim() const { return static_cast<int>(box_.dim()); }

 private:
  Mlp net_;
  Box box_;
  Vec center_;
  Vec half_width_;
  double log_std_min_ = -20.0;
  double log_std_max_ = 2.0;

  void SplitHead(const Mat& out, Mat* mean, Mat* log_std, Mat* mask) const;
};

// Q(s, u) with the action rescaled to [−1, 1] before entering the network.
class Critic {
 public:
  Critic() = default;
  Critic(Mlp net, Box box);

  Mat Input(const Mat& obs, const Mat& u) const;
  Vec Value(const Mat& obs, const Mat& u, Mlp::Cache* cache = nullptr) const;
  // dQ/du for each column.
  Mat ActionGradient(const Mlp::Cache& cache) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
  Box box_;
  Vec inv_half_width_;
};

struct UpdateStats {
  double critic_loss[2] = {0.0, 0.0};
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double penalty = 0.0;  // batch mean of the CBF penalty at u_nom
  double entropy = 0.0;  // −mean log π
  double q_mean = 0.0;
};

struct Batch {
  Mat obs;
  Mat u_safe;
  Vec reward;
  Mat next_obs;
  Vec not_done;
  std::vector<std::vector<filter::ConstraintRow>> rows;
  std::vector<std::vector<filter::ConstraintRow>> next_rows;
};

// Stacks records and assembles rows at z and z' through the filter.
Batch MakeBatch(const std::vector<const ReplayRecord*>& records, const ActionFilter& filter);

class Sac {
 public:
  Sac(int obs_dim, Box box, SacConfig config, std::uint64_t seed);

  const SacConfig& config() const { return config_; }
  int obs_dim() const { return obs_dim_; }

  // Stochastic draw (training) or tanh(mean) (evaluation), internal rng.
  Vec Act(const Vec& obs, bool deterministic);
  Mat StandardNormal(Eigen::Index rows, Eigen::Index cols);

  UpdateStats Update(const std::vector<const ReplayRecord*>& records,
                     const ActionFilter& filter);
  UpdateStats Update(const Batch& batch, const ActionFilter& filter);

  // Soft targets with the filtered next action; eps_next drives u'_nom.
  Vec CriticTargets(const Batch& batch, const ActionFilter& filter,
                    const Mat& eps_next) const;
  // mean (Q_k(s, u) − y)².
  double CriticLoss(int k, const Mat& obs, const Mat& u, const Vec& y, Vec* grad) const;
  // mean[α log π − min_k Q_k] + λ_h mean ℓ_cbf(u_nom).
  double ActorLoss(const Mat& obs, const Mat& eps,
                   const std::vector<std::vector<filter::ConstraintRow>>& rows,
                   Vec* grad, Vec* log_prob = nullptr, double* penalty = nullptr) const;

  SquashedGaussianActor& actor() { return actor_; }
  const SquashedGaussianActor& actor() const { return actor_; }
  Critic& critic(int k) { return critics_[k]; }
  const Critic& critic(int k) const { return critics_[k]; }
  Critic& target(int k) { return targets_[k]; }
  const Critic& target(int k) const { return targets_[k]; }
  double log_alpha() const { return log_alpha_; }
  void set_log_alpha(double v) { log_alpha_ = v; }
  double alpha() const;
  double target_entropy() const { return -static_cast<double>(box_.dim()); }
  long updates() const { return updates_; }
  std::mt19937_64& rng() { return rng_; }

  Json ToJson() const;
  static Sac FromJson(const Json& j);

 private:
  Sac() = default;

  int obs_dim_ = 0;
  Box box_;
  SacConfig config_;
  std::mt19937_64 rng_;
  SquashedGaussianActor actor_;
  Critic critics_[2];
  Critic targets_[2];
  Adam actor_opt_;
  Adam critic_opt_[2];
  Adam alpha_opt_;
  double log_alpha_ = 0.0;
  long updates_ = 0;
};

}  // namespace kcbf::agent
