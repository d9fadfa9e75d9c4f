#pragma once

#include <array>
#include <vector>

#include "common/json_util.hpp"
#include "common/types.hpp"
#include "filter/safety_filter.hpp"

namespace kcbf::experiments {

// One environment step as seen by the metrics.
struct StepLog {
  long step = 0;
  double reward = 0.0;
  Vec h;         // true-state constraint values after the step
  Vec xi;        // filter slack per row (empty without a filter)
  double intervention_norm = 0.0;
  bool intervened = false;
  bool violated = false;  // any h < 0
  std::vector<filter::RegimeReport> regimes;
};

struct EpisodeLog {
  Vec initial_h;
  std::vector<StepLog> steps;
  bool terminal = false;
};

enum RegimeBin { kBinFilterActive, kBinInfeasible, kBinTrivial, kBinTrivialUnsafe, kNumRegimeBins };
const char* RegimeBinName(int bin);

struct EpisodeDiagnostics {
  double episode_return = 0.0;
  long length = 0;
  double violation_rate = 0.0;
  double intervention_rate = 0.0;
  double slack_rate = 0.0;
  double min_h = 0.0;
  std::array<long, kNumRegimeBins> regime_counts{};  // over (step, barrier) pairs

  Json ToJson() const;
};

// ξ above this counts as a slack step.
inline constexpr double kSlackStepTolerance = 1e-8;

// Throws EmptyLog on an episode without steps.
EpisodeDiagnostics ComputeDiagnostics(const EpisodeLog& log);

// Mean over episodes of each rate, mean/std of returns, min of min_h, summed
// regime counts.
struct EvalSummary {
  int episodes = 0;
  double return_mean = 0.0;
  double return_std = 0.0;
  double length_mean = 0.0;
  double violation_rate = 0.0;
  double intervention_rate = 0.0;
  double slack_rate = 0.0;
  double min_h = 0.0;
  std::array<long, kNumRegimeBins> regime_counts{};

  double RegimeFraction(int bin) const;
  Json ToJson() const;
};

EvalSummary Summarize(const std::vector<EpisodeDiagnostics>& episodes);

// Sample mean and standard deviation (n − 1 denominator; 0 for one value).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd ComputeMeanStd(const std::vector<double>& xs);

}  // namespace kcbf::experiments
