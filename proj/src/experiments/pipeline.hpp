#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "agent/action_filter.hpp"
#include "agent/sac.hpp"
#include "barrier/barrier.hpp"
#include "barrier/calibration.hpp"
#include "envs/env.hpp"
#include "experiments/config.hpp"
#include "experiments/diagnostics.hpp"
#include "koopman/model.hpp"

namespace kcbf::experiments {

// Random-action rollouts in modeling-state coordinates. Episodes restart on
// termination, truncation or leaving the constraint set; each restart draws
// a fresh start step so tracking references are sampled at all phases.
std::vector<koopman::Transition> CollectTransitions(envs::Env& env, int count,
                                                    std::uint64_t seed);

struct DataSplit {
  std::vector<koopman::Transition> fit;
  std::vector<koopman::Transition> calibration;
  std::vector<size_t> fit_indices;          // ascending
  std::vector<size_t> calibration_indices;  // ascending
};

// Fixed-seed split; the fit part keeps collection order so contiguous runs
// survive. Throws Internal if an index lands in both parts.
DataSplit SplitCalibration(const std::vector<koopman::Transition>& data,
                           int calibration_size, std::uint64_t seed);

// One lifted barrier per env constraint. "composite" swaps lower position
// bounds with an actuated rate for α(p − p_min) + β ṗ.
std::vector<barrier::LiftedBarrier> BuildBarriers(const envs::Env& env,
                                                  const RunConfig& config,
                                                  int lifted_dim);

// Plant coordinate holding the rate of `coordinate`, or −1.
int RateCoordinate(const std::string& env_name, int coordinate);

struct SafetyModel {
  koopman::KoopmanModel model;
  std::vector<barrier::LiftedBarrier> barriers;  // calibrated
  barrier::CalibrationReport calibration;
  int num_fit = 0;
};

// Collect, split, fit and calibrate.
SafetyModel BuildSafetyModel(const RunConfig& config);

filter::FilterOptions MakeFilterOptions(const RunConfig& config);
std::unique_ptr<agent::ActionFilter> MakeActionFilter(const RunConfig& config,
                                                      const SafetyModel& safety,
                                                      const Box& box);

// Maps (observation, plant state, step) to a nominal action.
using Policy = std::function<Vec(const Vec& obs, const Vec& x, long step)>;

// Resets `env` with rng and runs one episode through the filter. A trace
// writer, when given, receives every filter result.
EpisodeLog RunEpisode(envs::Env& env, const koopman::KoopmanModel& model,
                      const agent::ActionFilter& filter, const Policy& policy,
                      std::mt19937_64& rng, filter::FilterTraceWriter* trace = nullptr);

std::vector<EpisodeDiagnostics> Evaluate(envs::Env& env, const koopman::KoopmanModel& model,
                                         const agent::ActionFilter& filter,
                                         const Policy& policy, int episodes,
                                         std::uint64_t seed,
                                         filter::FilterTraceWriter* trace = nullptr,
                                         std::vector<koopman::Transition>* transitions = nullptr);

// Seed of the evaluation episodes run at `step` for training seed `seed`.
std::uint64_t EvalSeed(std::uint64_t seed, long step);

struct MetricsRow {
  std::uint64_t seed = 0;
  long step = 0;
  std::string phase;  // train | final
  EvalSummary eval;
};

struct TrainEpisodeRow {
  std::uint64_t seed = 0;
  long episode = 0;
  long end_step = 0;
  EpisodeDiagnostics diag;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<MetricsRow> metrics;
  std::vector<TrainEpisodeRow> train_episodes;
  EvalSummary final_eval;
  long updates = 0;
  // Per barrier: share of final-evaluation transitions whose projected
  // residual exceeds the calibrated margin.
  std::vector<double> coverage_exceedance;
  std::unique_ptr<agent::Sac> agent;  // null for fixed nominal laws
};

// Runs the training loop (agent nominal) or only the final evaluation
// (lqr / pd) for one seed.
SeedResult RunSeed(const RunConfig& config, const SafetyModel& safety, std::uint64_t seed,
                   std::ostream* trace_out = nullptr);

struct RunResult {
  std::string run_id;
  std::string directory;
  SafetyModel safety;
  std::vector<SeedResult> seeds;
  Json summary;
};

// Full pipeline with artifacts under <out>/<run-id>/. A zero budget stops
// after model.json and calibration.json. On failure the
// artifacts written so far stay in place next to failure.json and the error
// is rethrown.
RunResult RunPipeline(const RunConfig& config, const std::string& out_root);

}  // namespace kcbf::experiments
