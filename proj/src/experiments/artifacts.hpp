#pragma once

#include <string>
#include <vector>

#include "common/json_util.hpp"
#include "experiments/pipeline.hpp"

namespace kcbf::experiments {

// Versioned CSV: a "# <schema> v<version> config_hash=<hash>" line, a header,
// then rows.
struct CsvTable {
  std::string schema;
  int version = 0;
  std::string config_hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  size_t Column(const std::string& name) const;  // throws SchemaMismatch
  double Number(size_t row, const std::string& column) const;
};

inline constexpr int kCsvVersion = 1;

// Shortest round-trip form; inf/nan spelled as in JSON artifacts.
std::string FormatNumber(double v);

// Throws SchemaMismatch when the comment line names another schema/version.
CsvTable ReadCsv(const std::string& path, const std::string& expected_schema);

std::vector<std::string> MetricsHeader();
void WriteMetricsCsv(const std::string& path, const std::string& config_hash,
                     const std::vector<MetricsRow>& rows);
void WriteEpisodesCsv(const std::string& path, const std::string& config_hash,
                      const std::vector<TrainEpisodeRow>& rows);

Json MakeSummary(const RunConfig& config, const SafetyModel& safety,
                 const std::vector<SeedResult>& seeds);

// η ablation: one pipeline run per value on the synthetic plant.
struct AblationRow {
  double eta = 0.0;
  std::string run_id;
  double return_mean = 0.0;
  double violation_rate = 0.0;
  double intervention_rate = 0.0;
  double slack_rate = 0.0;
};
struct AblationResult {
  std::vector<AblationRow> rows;  // ascending η
  // Every tighter (smaller) η has intervention or slack at least as high as
  // each looser one.
  bool trend_holds = false;
};
AblationResult AblateEta(const RunConfig& base, const std::vector<double>& etas,
                         const std::string& out_root);
void WriteAblationCsv(const std::string& path, const std::string& config_hash,
                      const AblationResult& result);

struct RhoRow {
  std::string run_id;
  std::string env;
  double rho = 0.0;  // largest finite calibrated margin of the run
  double violation_rate = 0.0;
};
struct RhoReport {
  std::vector<RhoRow> rows;
  bool rank_test_run = false;
  bool rank_test_passed = false;
  std::string note;
};
// Env family rank order: cartpole < quadrotor < synthetic_contact.
int EnvFamilyRank(const std::string& env);
RhoReport RhoEffectReport(const std::vector<Json>& summaries);
void WriteRhoCsv(const std::string& path, const RhoReport& report);

}  // namespace kcbf::experiments
