#include "experiments/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace kcbf::experiments {

const char* RegimeBinName(int bin) {
  switch (bin) {
    case kBinFilterActive: return "filter_active";
    case kBinInfeasible: return "infeasible_proneness";
    case kBinTrivial: return "trivially_satisfied";
    case kBinTrivialUnsafe: return "trivially_satisfied_unsafe";
    default: return "unknown";
  }
}

Json EpisodeDiagnostics::ToJson() const {
  Json regimes = Json::object();
  for (int b = 0; b < kNumRegimeBins; ++b) regimes[RegimeBinName(b)] = regime_counts[b];
  return {{"return", episode_return},
          {"length", length},
          {"violation_rate", violation_rate},
          {"intervention_rate", intervention_rate},
          {"slack_rate", slack_rate},
          {"min_h", NumberToJson(min_h)},
          {"regimes", regimes}};
}

EpisodeDiagnostics ComputeDiagnostics(const EpisodeLog& log) {
  KCBF_REQUIRE(!log.steps.empty(), ErrorCode::kEmptyLog, "episode log has no steps");
  EpisodeDiagnostics d;
  d.length = static_cast<long>(log.steps.size());
  long violations = 0, interventions = 0, slack = 0;
  double min_h = std::numeric_limits<double>::infinity();
  if (log.initial_h.size() > 0) min_h = log.initial_h.minCoeff();
  for (const StepLog& s : log.steps) {
    d.episode_return += s.reward;
    violations += s.violated ? 1 : 0;
    interventions += s.intervened ? 1 : 0;
    bool slack_step = false;
    for (Eigen::Index j = 0; j < s.xi.size(); ++j) {
      if (s.xi(j) > kSlackStepTolerance) slack_step = true;
    }
    slack += slack_step ? 1 : 0;
    if (s.h.size() > 0) min_h = std::min(min_h, s.h.minCoeff());
    for (const auto& r : s.regimes) {
      switch (r.regime) {
        case filter::Regime::kFilterActive: ++d.regime_counts[kBinFilterActive]; break;
        case filter::Regime::kInfeasibleProneness: ++d.regime_counts[kBinInfeasible]; break;
        case filter::Regime::kTriviallySatisfied:
          ++d.regime_counts[r.unsafe ? kBinTrivialUnsafe : kBinTrivial];
          break;
      }
    }
  }
  const auto n = static_cast<double>(d.length);
  d.violation_rate = static_cast<double>(violations) / n;
  d.intervention_rate = static_cast<double>(interventions) / n;
  d.slack_rate = static_cast<double>(slack) / n;
  d.min_h = min_h;
  return d;
}

double EvalSummary::RegimeFraction(int bin) const {
  long total = 0;
  for (long c : regime_counts) total += c;
  return total == 0 ? 0.0 : static_cast<double>(regime_counts[static_cast<size_t>(bin)]) /
                                static_cast<double>(total);
}

Json EvalSummary::ToJson() const {
  Json regimes = Json::object();
  for (int b = 0; b < kNumRegimeBins; ++b) {
    regimes[RegimeBinName(b)] = {{"count", regime_counts[static_cast<size_t>(b)]},
                                 {"fraction", RegimeFraction(b)}};
  }
  return {{"episodes", episodes},
          {"return_mean", return_mean},
          {"return_std", return_std},
          {"length_mean", length_mean},
          {"violation_rate", violation_rate},
          {"intervention_rate", intervention_rate},
          {"slack_rate", slack_rate},
          {"min_h", NumberToJson(min_h)},
          {"regimes", regimes}};
}

EvalSummary Summarize(const std::vector<EpisodeDiagnostics>& episodes) {
  KCBF_REQUIRE(!episodes.empty(), ErrorCode::kEmptyLog, "no episodes to summarize");
  EvalSummary s;
  s.episodes = static_cast<int>(episodes.size());
  std::vector<double> returns;
  s.min_h = std::numeric_limits<double>::infinity();
  for (const auto& e : episodes) {
    returns.push_back(e.episode_return);
    s.length_mean += static_cast<double>(e.length);
    s.violation_rate += e.violation_rate;
    s.intervention_rate += e.intervention_rate;
    s.slack_rate += e.slack_rate;
    s.min_h = std::min(s.min_h, e.min_h);
    for (size_t b = 0; b < s.regime_counts.size(); ++b) s.regime_counts[b] += e.regime_counts[b];
  }
  const auto n = static_cast<double>(episodes.size());
  s.length_mean /= n;
  s.violation_rate /= n;
  s.intervention_rate /= n;
  s.slack_rate /= n;
  const MeanStd r = ComputeMeanStd(returns);
  s.return_mean = r.mean;
  // Spread of episode returns within one evaluation (population form).
  double ss = 0.0;
  for (double x : returns) ss += (x - r.mean) * (x - r.mean);
  s.return_std = std::sqrt(ss / n);
  return s;
}

MeanStd ComputeMeanStd(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace kcbf::experiments
