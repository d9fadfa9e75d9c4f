#include "agent/sac.hpp"

#include <cmath>
#include <sstream>

#include "common/error.hpp"

namespace kcbf::agent {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double Softplus(double y) { return y > 0.0 ? y + std::log1p(std::exp(-y)) : std::log1p(std::exp(y)); }

// log(1 − tanh²(x)) without cancellation for large |x|.
double LogOneMinusTanhSq(double x) {
  return 2.0 * (std::log(2.0) - x - Softplus(-2.0 * x));
}

void RequireFinite(double v, const std::string& what, const UpdateStats& s) {
  if (std::isfinite(v)) return;
  std::ostringstream os;
  os << what << " is not finite (critic " << s.critic_loss[0] << ", " << s.critic_loss[1]
     << "; actor " << s.actor_loss << "; alpha " << s.alpha << "; penalty " << s.penalty
     << "; entropy " << s.entropy << ")";
  Throw(ErrorCode::kNonFiniteLoss, os.str());
}

}  // namespace

Json SacConfig::ToJson() const {
  return {{"hidden_width", hidden_width},
          {"hidden_layers", hidden_layers},
          {"lr", lr},
          {"gamma", gamma},
          {"tau", tau},
          {"batch_size", batch_size},
          {"lambda_h", lambda_h},
          {"init_alpha", init_alpha},
          {"learn_alpha", learn_alpha},
          {"log_std_min", log_std_min},
          {"log_std_max", log_std_max},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"buffer_capacity", buffer_capacity}};
}

SacConfig SacConfig::FromJson(const Json& j) {
  SacConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("hidden_width", c.hidden_width);
  get("hidden_layers", c.hidden_layers);
  get("lr", c.lr);
  get("gamma", c.gamma);
  get("tau", c.tau);
  get("batch_size", c.batch_size);
  get("lambda_h", c.lambda_h);
  get("init_alpha", c.init_alpha);
  get("learn_alpha", c.learn_alpha);
  get("log_std_min", c.log_std_min);
  get("log_std_max", c.log_std_max);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("buffer_capacity", c.buffer_capacity);
  KCBF_REQUIRE(c.hidden_width >= 1 && c.hidden_layers >= 1 && c.batch_size >= 1,
               ErrorCode::kInvalidArgument, "agent sizes must be positive");
  KCBF_REQUIRE(c.lr > 0.0 && c.gamma >= 0.0 && c.gamma <= 1.0 && c.tau >= 0.0 &&
                   c.tau <= 1.0 && c.init_alpha > 0.0 && c.lambda_h >= 0.0,
               ErrorCode::kInvalidArgument, "agent hyperparameter out of range");
  KCBF_REQUIRE(c.log_std_min < c.log_std_max, ErrorCode::kInvalidArgument,
               "log-std clamp is empty");
  return c;
}

SquashedGaussianActor::SquashedGaussianActor(Mlp net, Box box, double log_std_min,
                                             double log_std_max)
    : net_(std::move(net)),
      box_(std::move(box)),
      center_(box_.Center()),
      half_width_(0.5 * (box_.upper - box_.lower)),
      log_std_min_(log_std_min),
      log_std_max_(log_std_max) {
  KCBF_REQUIRE(net_.output_dim() == 2 * box_.dim(), ErrorCode::kInvalidArgument,
               "actor head must output mean and log-std");
  KCBF_REQUIRE((half_width_.array() > 0.0).all(), ErrorCode::kInvalidArgument,
               "actor needs a box with nonempty interior");
}

void SquashedGaussianActor::SplitHead(const Mat& out, Mat* mean, Mat* log_std,
                                      Mat* mask) const {
  const Eigen::Index nu = box_.dim();
  *mean = out.topRows(nu);
  const Mat raw = out.bottomRows(nu);
  *log_std = raw.cwiseMax(log_std_min_).cwiseMin(log_std_max_);
  if (mask) {
    *mask = ((raw.array() >= log_std_min_) && (raw.array() <= log_std_max_)).cast<double>();
  }
}

PolicySample SquashedGaussianActor::Sample(const Mat& obs, const Mat& eps) const {
  const Eigen::Index nu = box_.dim(), B = obs.cols();
  KCBF_REQUIRE(eps.rows() == nu && eps.cols() == B, ErrorCode::kInvalidArgument,
               "noise has the wrong shape");
  PolicySample s;
  const Mat out = net_.Forward(obs, &s.cache);
  Mat mean, log_std;
  SplitHead(out, &mean, &log_std, &s.log_std_mask);
  s.eps = eps;
  s.std = log_std.array().exp();
  s.pre = mean.array() + s.std.array() * eps.array();
  s.squashed = s.pre.array().tanh();
  s.u = (s.squashed.array().colwise() * half_width_.array()).colwise() + center_.array();
  const double log_hw = half_width_.array().log().sum();
  s.log_prob.resize(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    double lp = -log_hw;
    for (Eigen::Index i = 0; i < nu; ++i) {
      lp += -0.5 * eps(i, j) * eps(i, j) - log_std(i, j) - kHalfLog2Pi -
            LogOneMinusTanhSq(s.pre(i, j));
    }
    s.log_prob(j) = lp;
  }
  return s;
}

Mat SquashedGaussianActor::Deterministic(const Mat& obs) const {
  const Mat mean = net_.Forward(obs).topRows(box_.dim());
  return (mean.array().tanh().colwise() * half_width_.array()).colwise() + center_.array();
}

Vec SquashedGaussianActor::LogProb(const Mat& obs, const Mat& u) const {
  const Eigen::Index nu = box_.dim(), B = obs.cols();
  KCBF_REQUIRE(u.rows() == nu && u.cols() == B, ErrorCode::kInvalidArgument,
               "actions have the wrong shape");
  Mat mean, log_std;
  SplitHead(net_.Forward(obs), &mean, &log_std, nullptr);
  const double log_hw = half_width_.array().log().sum();
  Vec out(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    double lp = -log_hw;
    for (Eigen::Index i = 0; i < nu; ++i) {
      const double t = (u(i, j) - center_(i)) / half_width_(i);
      KCBF_REQUIRE(std::abs(t) < 1.0, ErrorCode::kInvalidArgument,
                   "action on the box boundary has no density");
      const double pre = std::atanh(t);
      const double e = (pre - mean(i, j)) * std::exp(-log_std(i, j));
      lp += -0.5 * e * e - log_std(i, j) - kHalfLog2Pi - LogOneMinusTanhSq(pre);
    }
    out(j) = lp;
  }
  return out;
}

void SquashedGaussianActor::Backward(const PolicySample& s, const Mat& d_u,
                                     const Vec& d_log_prob, Vec* grad) const {
  const Eigen::Index nu = box_.dim();
  const Mat one_minus_sq = 1.0 - s.squashed.array().square();
  Mat g_pre = (d_u.array().colwise() * half_width_.array()) * one_minus_sq.array();
  g_pre.array() += (2.0 * s.squashed.array()).rowwise() * d_log_prob.transpose().array();
  Mat g_ls = g_pre.array() * s.std.array() * s.eps.array();
  g_ls.array().rowwise() -= d_log_prob.transpose().array();
  g_ls.array() *= s.log_std_mask.array();
  Mat d_out(2 * nu, s.u.cols());
  d_out << g_pre, g_ls;
  net_.Backward(s.cache, d_out, grad);
}

Critic::Critic(Mlp net, Box box)
    : net_(std::move(net)),
      box_(std::move(box)),
      inv_half_width_((2.0 / (box_.upper - box_.lower).array()).matrix()) {
  KCBF_REQUIRE(net_.output_dim() == 1, ErrorCode::kInvalidArgument,
               "critic must output a scalar");
}

Mat Critic::Input(const Mat& obs, const Mat& u) const {
  KCBF_REQUIRE(obs.cols() == u.cols() && u.rows() == box_.dim(),
               ErrorCode::kInvalidArgument, "critic input shape mismatch");
  Mat x(obs.rows() + u.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(u.rows()) =
      (u.colwise() - box_.Center()).array().colwise() * inv_half_width_.array();
  return x;
}

Vec Critic::Value(const Mat& obs, const Mat& u, Mlp::Cache* cache) const {
  return net_.Forward(Input(obs, u), cache).row(0).transpose();
}

Mat Critic::ActionGradient(const Mlp::Cache& cache) const {
  const Eigen::Index B = cache.activations.front().cols();
  const Mat dx = net_.Backward(cache, Mat::Ones(1, B), nullptr);
  return dx.bottomRows(box_.dim()).array().colwise() * inv_half_width_.array();
}

Batch MakeBatch(const std::vector<const ReplayRecord*>& records, const ActionFilter& filter) {
  KCBF_REQUIRE(!records.empty(), ErrorCode::kInvalidArgument, "batch is empty");
  const auto B = static_cast<Eigen::Index>(records.size());
  const Eigen::Index ns = records[0]->obs.size(), nu = records[0]->u_safe.size();
  Batch b;
  b.obs.resize(ns, B);
  b.next_obs.resize(ns, B);
  b.u_safe.resize(nu, B);
  b.reward.resize(B);
  b.not_done.resize(B);
  b.rows.reserve(records.size());
  b.next_rows.reserve(records.size());
  for (Eigen::Index j = 0; j < B; ++j) {
    const ReplayRecord& r = *records[static_cast<size_t>(j)];
    b.obs.col(j) = r.obs;
    b.next_obs.col(j) = r.next_obs;
    b.u_safe.col(j) = r.u_safe;
    b.reward(j) = r.reward;
    b.not_done(j) = r.terminal ? 0.0 : 1.0;
    b.rows.push_back(filter.Rows(r.z));
    b.next_rows.push_back(filter.Rows(r.next_z));
  }
  return b;
}

Sac::Sac(int obs_dim, Box box, SacConfig config, std::uint64_t seed)
    : obs_dim_(obs_dim), box_(std::move(box)), config_(config), rng_(seed) {
  KCBF_REQUIRE(obs_dim >= 1, ErrorCode::kInvalidArgument, "observation dimension must be positive");
  const int nu = static_cast<int>(box_.dim());
  std::vector<int> actor_sizes{obs_dim}, critic_sizes{obs_dim + nu};
  for (int l = 0; l < config_.hidden_layers; ++l) {
    actor_sizes.push_back(config_.hidden_width);
    critic_sizes.push_back(config_.hidden_width);
  }
  actor_sizes.push_back(2 * nu);
  critic_sizes.push_back(1);
  actor_ = SquashedGaussianActor(Mlp(actor_sizes, rng_), box_, config_.log_std_min,
                                 config_.log_std_max);
  const Adam::Options opt{config_.lr, config_.adam_beta1, config_.adam_beta2, config_.adam_eps};
  actor_opt_ = Adam(actor_.net().num_params(), opt);
  for (int k = 0; k < 2; ++k) {
    critics_[k] = Critic(Mlp(critic_sizes, rng_), box_);
    targets_[k] = critics_[k];
    critic_opt_[k] = Adam(critics_[k].net().num_params(), opt);
  }
  alpha_opt_ = Adam(1, opt);
  log_alpha_ = std::log(config_.init_alpha);
}

double Sac::alpha() const { return std::exp(log_alpha_); }

Mat Sac::StandardNormal(Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng_);
  }
  return m;
}

Vec Sac::Act(const Vec& obs, bool deterministic) {
  KCBF_REQUIRE(obs.size() == obs_dim_ && obs.allFinite(), ErrorCode::kInvalidArgument,
               "observation has the wrong size or is not finite");
  // Clamp guards the one-ulp overshoot of center + half_width·tanh at saturation.
  if (deterministic) return box_.Clamp(actor_.Deterministic(obs).col(0));
  return box_.Clamp(actor_.Sample(obs, StandardNormal(box_.dim(), 1)).u.col(0));
}

Vec Sac::CriticTargets(const Batch& batch, const ActionFilter& filter,
                       const Mat& eps_next) const {
  const Eigen::Index B = batch.obs.cols();
  const PolicySample next = actor_.Sample(batch.next_obs, eps_next);
  Mat u_safe(box_.dim(), B);
  for (Eigen::Index j = 0; j < B; ++j) {
    static const std::vector<filter::ConstraintRow> kNoRows;
    const auto& rows =
        batch.next_rows.empty() ? kNoRows : batch.next_rows[static_cast<size_t>(j)];
    u_safe.col(j) = filter.Project(rows, next.u.col(j));
  }
  const Vec q = targets_[0].Value(batch.next_obs, u_safe)
                    .cwiseMin(targets_[1].Value(batch.next_obs, u_safe));
  const Vec soft = q - alpha() * next.log_prob;
  return batch.reward + config_.gamma * batch.not_done.cwiseProduct(soft);
}

double Sac::CriticLoss(int k, const Mat& obs, const Mat& u, const Vec& y, Vec* grad) const {
  const Critic& c = critics_[k];
  Mlp::Cache cache;
  const Vec diff = c.Value(obs, u, &cache) - y;
  const auto B = static_cast<double>(obs.cols());
  if (grad) {
    *grad = Vec::Zero(c.net().num_params());
    c.net().Backward(cache, (2.0 / B) * diff.transpose(), grad);
  }
  return diff.squaredNorm() / B;
}

double Sac::ActorLoss(const Mat& obs, const Mat& eps,
                      const std::vector<std::vector<filter::ConstraintRow>>& rows,
                      Vec* grad, Vec* log_prob, double* penalty) const {
  const Eigen::Index B = obs.cols(), nu = box_.dim();
  KCBF_REQUIRE(rows.empty() || rows.size() == static_cast<size_t>(B),
               ErrorCode::kInvalidArgument, "one row set per sample expected");
  const PolicySample s = actor_.Sample(obs, eps);
  Mlp::Cache c0, c1;
  const Vec q0 = critics_[0].Value(obs, s.u, &c0);
  const Vec q1 = critics_[1].Value(obs, s.u, &c1);
  const Mat dq0 = critics_[0].ActionGradient(c0);
  const Mat dq1 = critics_[1].ActionGradient(c1);
  const double a = alpha();
  const double inv_b = 1.0 / static_cast<double>(B);

  double sac_term = 0.0, pen_total = 0.0;
  Mat d_u(nu, B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const bool first = q0(j) <= q1(j);
    sac_term += a * s.log_prob(j) - (first ? q0(j) : q1(j));
    d_u.col(j) = -(first ? dq0.col(j) : dq1.col(j));
    if (!rows.empty() && config_.lambda_h > 0.0) {
      const auto& r = rows[static_cast<size_t>(j)];
      const Vec u = s.u.col(j);
      pen_total += filter::CbfPenalty(r, u);
      d_u.col(j) += config_.lambda_h * filter::CbfPenaltyGradient(r, u);
    } else if (!rows.empty()) {
      pen_total += filter::CbfPenalty(rows[static_cast<size_t>(j)], s.u.col(j));
    }
  }
  d_u *= inv_b;
  if (grad) {
    *grad = Vec::Zero(actor_.net().num_params());
    actor_.Backward(s, d_u, Vec::Constant(B, a * inv_b), grad);
  }
  if (log_prob) *log_prob = s.log_prob;
  if (penalty) *penalty = pen_total * inv_b;
  return (sac_term + config_.lambda_h * pen_total) * inv_b;
}

UpdateStats Sac::Update(const std::vector<const ReplayRecord*>& records,
                        const ActionFilter& filter) {
  return Update(MakeBatch(records, filter), filter);
}

UpdateStats Sac::Update(const Batch& batch, const ActionFilter& filter) {
  const Eigen::Index B = batch.obs.cols(), nu = box_.dim();
  KCBF_REQUIRE(B >= 1, ErrorCode::kInvalidArgument, "batch is empty");
  UpdateStats st;
  st.alpha = alpha();

  const Vec y = CriticTargets(batch, filter, StandardNormal(nu, B));
  for (int k = 0; k < 2; ++k) {
    Vec g;
    st.critic_loss[k] = CriticLoss(k, batch.obs, batch.u_safe, y, &g);
    RequireFinite(st.critic_loss[k], "critic loss", st);
    critic_opt_[k].Step(critics_[k].net().params(), g);
  }
  st.q_mean = critics_[0].Value(batch.obs, batch.u_safe).mean();

  Vec g, log_prob;
  st.actor_loss = ActorLoss(batch.obs, StandardNormal(nu, B), batch.rows, &g, &log_prob,
                            &st.penalty);
  RequireFinite(st.actor_loss, "actor loss", st);
  actor_opt_.Step(actor_.net().params(), g);
  st.entropy = -log_prob.mean();

  const double gap = log_prob.mean() + target_entropy();
  st.alpha_loss = -log_alpha_ * gap;
  RequireFinite(st.alpha_loss, "temperature loss", st);
  if (config_.learn_alpha) {
    Vec la = Vec::Constant(1, log_alpha_);
    alpha_opt_.Step(la, Vec::Constant(1, -gap));
    log_alpha_ = la(0);
  }
  st.alpha = alpha();

  for (int k = 0; k < 2; ++k) {
    Vec& t = targets_[k].net().params();
    t = (1.0 - config_.tau) * t + config_.tau * critics_[k].net().params();
  }
  ++updates_;
  return st;
}

Json Sac::ToJson() const {
  std::ostringstream rng_state;
  rng_state << rng_;
  Json j{{"format", "kcbf-agent"},
         {"version", 1},
         {"obs_dim", obs_dim_},
         {"box_lower", VecToJson(box_.lower)},
         {"box_upper", VecToJson(box_.upper)},
         {"config", config_.ToJson()},
         {"actor", actor_.net().ToJson()},
         {"actor_opt", actor_opt_.ToJson()},
         {"alpha_opt", alpha_opt_.ToJson()},
         {"log_alpha", log_alpha_},
         {"updates", updates_},
         {"rng", rng_state.str()}};
  for (int k = 0; k < 2; ++k) {
    const std::string s = std::to_string(k);
    j["critic" + s] = critics_[k].net().ToJson();
    j["target" + s] = targets_[k].net().ToJson();
    j["critic_opt" + s] = critic_opt_[k].ToJson();
  }
  return j;
}

Sac Sac::FromJson(const Json& j) {
  RequireFormat(j, "kcbf-agent", 1);
  Sac s;
  s.obs_dim_ = j.at("obs_dim").get<int>();
  s.box_ = Box{VecFromJson(j.at("box_lower")), VecFromJson(j.at("box_upper"))};
  s.config_ = SacConfig::FromJson(j.at("config"));
  s.actor_ = SquashedGaussianActor(Mlp::FromJson(j.at("actor")), s.box_,
                                   s.config_.log_std_min, s.config_.log_std_max);
  s.actor_opt_ = Adam::FromJson(j.at("actor_opt"));
  s.alpha_opt_ = Adam::FromJson(j.at("alpha_opt"));
  s.log_alpha_ = j.at("log_alpha").get<double>();
  s.updates_ = j.at("updates").get<long>();
  std::istringstream rng_state(j.at("rng").get<std::string>());
  rng_state >> s.rng_;
  for (int k = 0; k < 2; ++k) {
    const std::string n = std::to_string(k);
    s.critics_[k] = Critic(Mlp::FromJson(j.at("critic" + n)), s.box_);
    s.targets_[k] = Critic(Mlp::FromJson(j.at("target" + n)), s.box_);
    s.critic_opt_[k] = Adam::FromJson(j.at("critic_opt" + n));
  }
  KCBF_REQUIRE(s.actor_.net().input_dim() == s.obs_dim_, ErrorCode::kSchemaMismatch,
               "checkpoint actor does not match its observation size");
  return s;
}

}  // namespace kcbf::agent
