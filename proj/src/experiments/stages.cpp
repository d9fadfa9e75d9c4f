#include "experiments/stages.hpp"

#include <filesystem>
#include <fstream>

#include "agent/controllers.hpp"
#include "common/error.hpp"
#include "experiments/artifacts.hpp"
#include "koopman/serialize.hpp"

namespace kcbf::experiments {

namespace fs = std::filesystem;

namespace {

std::string PrepareDir(const RunConfig& config, const std::string& out_root) {
  config.Validate();
  const fs::path dir = fs::path(out_root) / config.RunId();
  fs::create_directories(dir);
  WriteJsonFile((dir / "config.json").string(), config.ToJson());
  return dir.string();
}

void WriteTransitionsCsv(const std::string& path, const std::string& config_hash,
                         const std::vector<koopman::Transition>& data, const DataSplit& split) {
  std::ofstream out(path);
  KCBF_REQUIRE(out.good(), ErrorCode::kIo, "cannot write " + path);
  out << "# kcbf-transitions v" << kCsvVersion << " config_hash=" << config_hash << '\n';
  const auto& first = data.front();
  out << "index,set";
  for (Eigen::Index i = 0; i < first.y.size(); ++i) out << ",y" << i;
  for (Eigen::Index i = 0; i < first.u.size(); ++i) out << ",u" << i;
  for (Eigen::Index i = 0; i < first.y_plus.size(); ++i) out << ",y_plus" << i;
  out << '\n';
  std::vector<const char*> set(data.size(), "fit");
  for (size_t i : split.calibration_indices) set[i] = "calibration";
  for (size_t k = 0; k < data.size(); ++k) {
    out << k << ',' << set[k];
    for (const Vec* v : {&data[k].y, &data[k].u, &data[k].y_plus}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) out << ',' << FormatNumber((*v)(i));
    }
    out << '\n';
  }
  KCBF_REQUIRE(out.good(), ErrorCode::kIo, "write failed: " + path);
}

}  // namespace

std::string CollectStage(const RunConfig& config, const std::string& out_root) {
  const std::string dir = PrepareDir(config, out_root);
  auto env = envs::MakeEnv(config.env);
  const auto data = CollectTransitions(*env, config.num_transitions, config.data_seed);
  const DataSplit split =
      SplitCalibration(data, config.EffectiveCalibrationSize(), config.data_seed + 1);
  WriteTransitionsCsv((fs::path(dir) / "transitions.csv").string(), config.Hash(), data, split);
  return dir;
}

std::string FitStage(const RunConfig& config, const std::string& out_root) {
  const std::string dir = PrepareDir(config, out_root);
  const SafetyModel s = BuildSafetyModel(config);
  koopman::SaveModel(s.model, (fs::path(dir) / "model.json").string());
  return dir;
}

std::string CalibrateStage(const RunConfig& config, const std::string& out_root) {
  const std::string dir = PrepareDir(config, out_root);
  const SafetyModel s = BuildSafetyModel(config);
  koopman::SaveModel(s.model, (fs::path(dir) / "model.json").string());
  WriteJsonFile((fs::path(dir) / "calibration.json").string(),
                barrier::CalibrationToJson(s.calibration));
  return dir;
}

SafetyModel LoadSafetyModel(const RunConfig& config, const std::string& run_dir) {
  SafetyModel s;
  s.model = koopman::LoadModel((fs::path(run_dir) / "model.json").string());
  s.calibration =
      barrier::CalibrationFromJson(ReadJsonFile((fs::path(run_dir) / "calibration.json").string()));
  auto env = envs::MakeEnv(config.env);
  KCBF_REQUIRE(s.model.dictionary.state_dim() == env->model_state_dim(), ErrorCode::kSchemaMismatch,
               "model.json does not match env " + config.env);
  s.barriers = BuildBarriers(*env, config, s.model.lifted_dim());
  s.calibration.ApplyTo(s.barriers);
  s.num_fit = s.model.num_samples;
  return s;
}

EvalResult EvalStage(const RunConfig& config, const std::string& out_root, std::uint64_t seed,
                     int episodes) {
  KCBF_REQUIRE(episodes > 0, ErrorCode::kInvalidArgument, "episodes must be positive");
  EvalResult r;
  r.directory = PrepareDir(config, out_root);
  const fs::path dir(r.directory);
  SafetyModel safety;
  if (fs::exists(dir / "model.json") && fs::exists(dir / "calibration.json")) {
    safety = LoadSafetyModel(config, r.directory);
  } else {
    safety = BuildSafetyModel(config);
    koopman::SaveModel(safety.model, (dir / "model.json").string());
    WriteJsonFile((dir / "calibration.json").string(),
                  barrier::CalibrationToJson(safety.calibration));
  }

  auto env = envs::MakeEnv(config.env);
  const auto filter = MakeActionFilter(config, safety, env->spec().action_box);
  std::unique_ptr<agent::NominalController> fixed;
  std::unique_ptr<agent::Sac> sac;
  if (config.nominal == "lqr") fixed = agent::MakeLqr(*env);
  if (config.nominal == "pd") fixed = agent::MakePd(*env);
  if (!fixed) {
    const fs::path ckpt = dir / ("seed-" + std::to_string(seed)) / "checkpoint.json";
    KCBF_REQUIRE(fs::exists(ckpt), ErrorCode::kIo,
                 "no checkpoint at " + ckpt.string() + "; run train first");
    const Json j = ReadJsonFile(ckpt.string());
    KCBF_REQUIRE(j.value("config_hash", "") == config.Hash(), ErrorCode::kSchemaMismatch,
                 "checkpoint was trained with another config");
    sac = std::make_unique<agent::Sac>(agent::Sac::FromJson(j));
  }
  const Policy policy = [&](const Vec& obs, const Vec& x, long step) -> Vec {
    if (fixed) return fixed->Act(x, step);
    return sac->Act(obs, true);
  };
  r.episodes = Evaluate(*env, safety.model, *filter, policy, episodes,
                        EvalSeed(seed, config.budget), nullptr, nullptr);
  r.summary = Summarize(r.episodes);
  MetricsRow row;
  row.seed = seed;
  row.step = config.budget;
  row.phase = "eval";
  row.eval = r.summary;
  WriteMetricsCsv((dir / ("eval-seed-" + std::to_string(seed) + ".csv")).string(), config.Hash(),
                  {row});
  return r;
}

}  // namespace kcbf::experiments
