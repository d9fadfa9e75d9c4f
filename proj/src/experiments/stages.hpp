#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "experiments/config.hpp"
#include "experiments/diagnostics.hpp"
#include "experiments/pipeline.hpp"

namespace kcbf::experiments {

// Individual pipeline stages. Each writes config.json plus its own artifacts
// under <out_root>/<run-id>/ and returns that directory.

// transitions.csv with the fit/calibration split marked per row.
std::string CollectStage(const RunConfig& config, const std::string& out_root);

// model.json.
std::string FitStage(const RunConfig& config, const std::string& out_root);

// model.json and calibration.json.
std::string CalibrateStage(const RunConfig& config, const std::string& out_root);

// Rebuilds the calibrated barriers from a run directory's model.json and
// calibration.json; the barrier geometry comes from config.
SafetyModel LoadSafetyModel(const RunConfig& config, const std::string& run_dir);

struct EvalResult {
  std::string directory;
  std::vector<EpisodeDiagnostics> episodes;
  EvalSummary summary;
};

// Evaluates the configured nominal law (or the seed's saved checkpoint) with
// the same episode seeds as the final training evaluation. Reuses stored
// model and calibration when present. Writes eval-seed-<n>.csv.
EvalResult EvalStage(const RunConfig& config, const std::string& out_root,
                     std::uint64_t seed, int episodes);

}  // namespace kcbf::experiments
