#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agent/sac.hpp"
#include "barrier/calibration.hpp"
#include "common/json_util.hpp"
#include "filter/safety_filter.hpp"

namespace kcbf::experiments {

struct RunConfig {
  std::string name;  // run label; the env name when empty
  std::string env = "cartpole_stabilize";

  // Data and model.
  int num_transitions = 10000;
  int calibration_size = 2000;  // capped at 20% of num_transitions
  std::uint64_t data_seed = 2024;
  int dictionary_size = 32;
  double ridge_lambda = 1e-4;
  int fit_horizon = 10;

  // Barriers and calibration.
  std::string barrier_kind = "bound";  // bound | composite
  double composite_alpha = 1.0;
  double composite_beta = 0.5;
  std::vector<double> eta{0.9};  // per barrier; a single value applies to all
  double quantile_level = 0.95;
  barrier::QuantileMode quantile_mode = barrier::QuantileMode::kEmpirical;

  // Filter.
  bool use_filter = true;
  double slack_weight = 1e4;
  filter::SlackMode slack_mode = filter::SlackMode::kHardFirst;

  // Policy and training.
  std::string nominal = "agent";  // lqr | pd | agent
  agent::SacConfig agent;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  long budget = 30000;
  long random_steps = 1000;
  long update_after = 1000;
  int updates_per_step = 1;
  long eval_every = 5000;
  int eval_episodes = 10;
  int final_eval_episodes = 100;
  bool write_trace = true;

  void Validate() const;
  Json ToJson() const;
  static RunConfig FromJson(const Json& j);

  std::string label() const { return name.empty() ? env : name; }
  // FNV-1a of the canonical JSON form.
  std::string Hash() const;
  // <label>-<first 8 hex digits of the hash>
  std::string RunId() const;
  int EffectiveCalibrationSize() const;
  double EtaFor(size_t barrier_index) const;
};

RunConfig LoadConfig(const std::string& path);

// Per-env defaults: nominal, barrier kind and budget.
RunConfig DefaultConfig(const std::string& env);

}  // namespace kcbf::experiments
