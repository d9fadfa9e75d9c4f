#include "experiments/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "common/error.hpp"

namespace kcbf::experiments {

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string Num(double v) { return FormatNumber(v); }

double ParseNum(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  KCBF_REQUIRE(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::kParse,
               "not a number: '" + s + "'");
  return v;
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream OpenCsv(const std::string& path, const std::string& schema,
                      const std::string& config_hash, const std::vector<std::string>& header) {
  std::ofstream out(path);
  KCBF_REQUIRE(out.good(), ErrorCode::kIo, "cannot write " + path);
  out << "# " << schema << " v" << kCsvVersion << " config_hash=" << config_hash << '\n';
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  return out;
}

void WriteRow(std::ofstream& out, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << '\n';
}

double MaxFiniteRho(const Json& summary) {
  double best = -1.0;
  for (const auto& b : summary.at("barriers")) {
    const double rho = NumberFromJson(b.at("rho"));
    if (std::isfinite(rho)) best = std::max(best, rho);
  }
  return best < 0.0 ? std::numeric_limits<double>::infinity() : best;
}

}  // namespace

size_t CsvTable::Column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  KCBF_REQUIRE(it != header.end(), ErrorCode::kSchemaMismatch,
               "column '" + name + "' missing from " + schema);
  return static_cast<size_t>(it - header.begin());
}

double CsvTable::Number(size_t row, const std::string& column) const {
  return ParseNum(rows.at(row).at(Column(column)));
}

CsvTable ReadCsv(const std::string& path, const std::string& expected_schema) {
  std::ifstream in(path);
  KCBF_REQUIRE(in.good(), ErrorCode::kIo, "cannot read " + path);
  CsvTable t;
  std::string line;
  KCBF_REQUIRE(static_cast<bool>(std::getline(in, line)) && line.rfind("# ", 0) == 0,
               ErrorCode::kSchemaMismatch, path + " has no schema line");
  std::istringstream meta(line.substr(2));
  std::string version, hash;
  meta >> t.schema >> version >> hash;
  KCBF_REQUIRE(version.size() > 1 && version[0] == 'v', ErrorCode::kSchemaMismatch,
               path + " has a malformed schema line");
  t.version = std::stoi(version.substr(1));
  if (hash.rfind("config_hash=", 0) == 0) t.config_hash = hash.substr(12);
  KCBF_REQUIRE(t.schema == expected_schema && t.version == kCsvVersion,
               ErrorCode::kSchemaMismatch,
               "expected " + expected_schema + " v" + std::to_string(kCsvVersion) + ", found " +
                   t.schema + " " + version);
  KCBF_REQUIRE(static_cast<bool>(std::getline(in, line)), ErrorCode::kSchemaMismatch,
               path + " has no header");
  t.header = Split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = Split(line);
    KCBF_REQUIRE(cells.size() == t.header.size(), ErrorCode::kParse,
                 path + ": row width differs from the header");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::vector<std::string> MetricsHeader() {
  std::vector<std::string> h{"seed", "step", "phase", "episodes", "return_mean", "return_std",
                             "length_mean", "violation_rate", "intervention_rate",
                             "slack_rate", "min_h"};
  for (int b = 0; b < kNumRegimeBins; ++b) h.push_back(std::string("regime_") + RegimeBinName(b));
  return h;
}

void WriteMetricsCsv(const std::string& path, const std::string& config_hash,
                     const std::vector<MetricsRow>& rows) {
  auto out = OpenCsv(path, "kcbf-metrics", config_hash, MetricsHeader());
  for (const auto& r : rows) {
    std::vector<std::string> cells{std::to_string(r.seed),
                                   std::to_string(r.step),
                                   r.phase,
                                   std::to_string(r.eval.episodes),
                                   Num(r.eval.return_mean),
                                   Num(r.eval.return_std),
                                   Num(r.eval.length_mean),
                                   Num(r.eval.violation_rate),
                                   Num(r.eval.intervention_rate),
                                   Num(r.eval.slack_rate),
                                   Num(r.eval.min_h)};
    for (int b = 0; b < kNumRegimeBins; ++b) cells.push_back(Num(r.eval.RegimeFraction(b)));
    WriteRow(out, cells);
  }
}

void WriteEpisodesCsv(const std::string& path, const std::string& config_hash,
                      const std::vector<TrainEpisodeRow>& rows) {
  auto out = OpenCsv(path, "kcbf-episodes", config_hash,
                     {"seed", "episode", "end_step", "return", "length", "violation_rate",
                      "intervention_rate", "slack_rate", "min_h"});
  for (const auto& r : rows) {
    WriteRow(out, {std::to_string(r.seed), std::to_string(r.episode), std::to_string(r.end_step),
                   Num(r.diag.episode_return), std::to_string(r.diag.length),
                   Num(r.diag.violation_rate), Num(r.diag.intervention_rate),
                   Num(r.diag.slack_rate), Num(r.diag.min_h)});
  }
}

Json MakeSummary(const RunConfig& config, const SafetyModel& safety,
                 const std::vector<SeedResult>& seeds) {
  Json barriers = Json::array();
  for (size_t j = 0; j < safety.barriers.size(); ++j) {
    const auto& b = safety.barriers[j];
    const double authority = barrier::ControlAuthority(b, safety.model.B);
    barriers.push_back({{"label", b.label},
                        {"eta", b.eta},
                        {"rho", NumberToJson(b.rho)},
                        {"rho_infinite", b.rho_infinite()},
                        {"authority", authority},
                        {"degenerate", authority < filter::kDegeneracyThreshold}});
  }
  Json per_seed = Json::array();
  std::vector<double> ret, vio, inter, slack, minh;
  for (const auto& s : seeds) {
    Json entry{{"seed", s.seed},
               {"updates", s.updates},
               {"train_episodes", s.train_episodes.size()},
               {"final", s.final_eval.ToJson()}};
    if (!s.coverage_exceedance.empty()) entry["coverage_exceedance"] = s.coverage_exceedance;
    per_seed.push_back(entry);
    ret.push_back(s.final_eval.return_mean);
    vio.push_back(s.final_eval.violation_rate);
    inter.push_back(s.final_eval.intervention_rate);
    slack.push_back(s.final_eval.slack_rate);
    minh.push_back(s.final_eval.min_h);
  }
  auto ms = [](const std::vector<double>& xs) {
    const MeanStd m = ComputeMeanStd(xs);
    return Json{{"mean", NumberToJson(m.mean)}, {"std", NumberToJson(m.std)}};
  };
  Json aggregate{{"return", ms(ret)},
                 {"violation_rate", ms(vio)},
                 {"intervention_rate", ms(inter)},
                 {"slack_rate", ms(slack)},
                 {"min_h", ms(minh)}};
  aggregate["min_h"]["min"] =
      NumberToJson(minh.empty() ? 0.0 : *std::min_element(minh.begin(), minh.end()));
  aggregate["violation_rate"]["max"] =
      vio.empty() ? 0.0 : *std::max_element(vio.begin(), vio.end());
  return {{"format", "kcbf-summary"},
          {"version", 1},
          {"run_id", config.RunId()},
          {"config_hash", config.Hash()},
          {"env", config.env},
          {"nominal", config.nominal},
          {"filter", config.use_filter},
          {"return_scale", "kcbf environment rewards; not comparable with other suites"},
          {"model",
           {{"lifted_dim", safety.model.lifted_dim()},
            {"dictionary_size", safety.model.dictionary.num_features()},
            {"fit_mse1", safety.model.fit_mse1},
            {"fit_mseH", safety.model.fit_mseH},
            {"num_fit", safety.num_fit},
            {"num_calibration", safety.calibration.num_calibration}}},
          {"barriers", barriers},
          {"seeds", per_seed},
          {"aggregate", aggregate}};
}

AblationResult AblateEta(const RunConfig& base, const std::vector<double>& etas,
                         const std::string& out_root) {
  KCBF_REQUIRE(!etas.empty(), ErrorCode::kInvalidArgument, "no eta values to ablate");
  KCBF_REQUIRE(base.env == "synthetic_contact", ErrorCode::kInvalidArgument,
               "eta ablation runs on synthetic_contact, got " + base.env);
  std::set<double> sorted(etas.begin(), etas.end());
  AblationResult result;
  for (double eta : sorted) {
    KCBF_REQUIRE(eta > 0.0 && eta <= 1.0, ErrorCode::kInvalidArgument,
                 "eta must lie in (0, 1]");
    RunConfig cfg = base;
    cfg.eta = {eta};
    cfg.name = "ablate-" + base.label() + "-eta" + Num(eta);
    const RunResult run = RunPipeline(cfg, out_root);
    const Json& agg = run.summary.at("aggregate");
    AblationRow row;
    row.eta = eta;
    row.run_id = run.run_id;
    row.return_mean = NumberFromJson(agg.at("return").at("mean"));
    row.violation_rate = NumberFromJson(agg.at("violation_rate").at("mean"));
    row.intervention_rate = NumberFromJson(agg.at("intervention_rate").at("mean"));
    row.slack_rate = NumberFromJson(agg.at("slack_rate").at("mean"));
    result.rows.push_back(row);
  }
  result.trend_holds = true;
  for (size_t i = 0; i < result.rows.size(); ++i) {
    for (size_t j = i + 1; j < result.rows.size(); ++j) {
      const auto& tight = result.rows[i];
      const auto& loose = result.rows[j];
      if (tight.intervention_rate < loose.intervention_rate &&
          tight.slack_rate < loose.slack_rate) {
        result.trend_holds = false;
      }
    }
  }
  return result;
}

void WriteAblationCsv(const std::string& path, const std::string& config_hash,
                      const AblationResult& result) {
  auto out = OpenCsv(path, "kcbf-ablation", config_hash,
                     {"eta", "run_id", "return_mean", "violation_rate", "intervention_rate",
                      "slack_rate"});
  for (const auto& r : result.rows) {
    WriteRow(out, {Num(r.eta), r.run_id, Num(r.return_mean), Num(r.violation_rate),
                   Num(r.intervention_rate), Num(r.slack_rate)});
  }
}

int EnvFamilyRank(const std::string& env) {
  if (env.rfind("cartpole", 0) == 0) return 0;
  if (env.rfind("quadrotor", 0) == 0) return 1;
  if (env == "synthetic_contact") return 2;
  Throw(ErrorCode::kUnknownKind, "no rank for env " + env);
}

RhoReport RhoEffectReport(const std::vector<Json>& summaries) {
  RhoReport rep;
  for (const auto& s : summaries) {
    RequireFormat(s, "kcbf-summary", 1);
    RhoRow row;
    row.run_id = s.at("run_id").get<std::string>();
    row.env = s.at("env").get<std::string>();
    row.rho = MaxFiniteRho(s);
    row.violation_rate = NumberFromJson(s.at("aggregate").at("violation_rate").at("mean"));
    rep.rows.push_back(row);
  }
  std::set<int> families;
  for (const auto& r : rep.rows) families.insert(EnvFamilyRank(r.env));
  if (families.size() < 2) {
    rep.note = "fewer than two env families; rank test skipped";
    return rep;
  }
  bool tie = false, ordered = true;
  for (const auto& a : rep.rows) {
    for (const auto& b : rep.rows) {
      const int ra = EnvFamilyRank(a.env), rb = EnvFamilyRank(b.env);
      if (ra >= rb) continue;
      if (a.rho == b.rho) tie = true;
      if (!(a.rho < b.rho)) ordered = false;
    }
  }
  if (tie) {
    rep.note = "equal rho across env families; rank test skipped";
    return rep;
  }
  rep.rank_test_run = true;
  rep.rank_test_passed = ordered;
  rep.note = ordered ? "rho increases with env family rank"
                     : "rho does not follow cartpole < quadrotor < synthetic_contact";
  return rep;
}

void WriteRhoCsv(const std::string& path, const RhoReport& report) {
  auto out = OpenCsv(path, "kcbf-rho", "none", {"run_id", "env", "rho", "violation_rate"});
  for (const auto& r : report.rows) {
    WriteRow(out, {r.run_id, r.env, Num(r.rho), Num(r.violation_rate)});
  }
}

}  // namespace kcbf::experiments
