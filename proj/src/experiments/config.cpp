#include "experiments/config.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "envs/env.hpp"

namespace kcbf::experiments {
namespace {

const char* SlackModeName(filter::SlackMode m) {
  return m == filter::SlackMode::kHardFirst ? "hard_first" : "always_slack";
}

filter::SlackMode SlackModeFromName(const std::string& s) {
  if (s == "hard_first") return filter::SlackMode::kHardFirst;
  if (s == "always_slack") return filter::SlackMode::kAlwaysSlack;
  Throw(ErrorCode::kUnknownKind, "unknown slack mode '" + s + "'");
}

}  // namespace

void RunConfig::Validate() const {
  const auto names = envs::EnvNames();
  KCBF_REQUIRE(std::find(names.begin(), names.end(), env) != names.end(),
               ErrorCode::kUnknownKind, "unknown env '" + env + "'");
  KCBF_REQUIRE(nominal == "lqr" || nominal == "pd" || nominal == "agent",
               ErrorCode::kUnknownKind, "unknown nominal controller '" + nominal + "'");
  KCBF_REQUIRE(barrier_kind == "bound" || barrier_kind == "composite",
               ErrorCode::kUnknownKind, "unknown barrier kind '" + barrier_kind + "'");
  KCBF_REQUIRE(!seeds.empty(), ErrorCode::kInvalidArgument, "seed list is empty");
  KCBF_REQUIRE(num_transitions >= 10, ErrorCode::kInvalidArgument,
               "need at least 10 transitions");
  KCBF_REQUIRE(calibration_size >= 1, ErrorCode::kInvalidArgument,
               "calibration size must be positive");
  KCBF_REQUIRE(dictionary_size >= 0 && ridge_lambda >= 0.0 && fit_horizon >= 1,
               ErrorCode::kInvalidArgument, "model settings out of range");
  KCBF_REQUIRE(!eta.empty(), ErrorCode::kInvalidArgument, "eta list is empty");
  for (double e : eta) {
    KCBF_REQUIRE(e > 0.0 && e <= 1.0, ErrorCode::kInvalidArgument, "eta must lie in (0, 1]");
  }
  KCBF_REQUIRE(quantile_level > 0.0 && quantile_level < 1.0, ErrorCode::kInvalidArgument,
               "quantile level must lie in (0, 1)");
  KCBF_REQUIRE(composite_alpha > 0.0 && composite_beta >= 0.0, ErrorCode::kNonpositiveWeights,
               "composite weights out of range");
  KCBF_REQUIRE(slack_weight > 0.0, ErrorCode::kInvalidArgument, "slack weight must be positive");
  KCBF_REQUIRE(budget >= 0 && random_steps >= 0 && update_after >= 0 && updates_per_step >= 0,
               ErrorCode::kInvalidArgument, "training schedule out of range");
  KCBF_REQUIRE(eval_every >= 1 && eval_episodes >= 1 && final_eval_episodes >= 1,
               ErrorCode::kInvalidArgument, "evaluation schedule out of range");
}

Json RunConfig::ToJson() const {
  return {{"format", "kcbf-config"},
          {"version", 1},
          {"name", name},
          {"env", env},
          {"num_transitions", num_transitions},
          {"calibration_size", calibration_size},
          {"data_seed", data_seed},
          {"dictionary_size", dictionary_size},
          {"ridge_lambda", ridge_lambda},
          {"fit_horizon", fit_horizon},
          {"barrier_kind", barrier_kind},
          {"composite_alpha", composite_alpha},
          {"composite_beta", composite_beta},
          {"eta", eta},
          {"quantile_level", quantile_level},
          {"quantile_mode", barrier::ToString(quantile_mode)},
          {"use_filter", use_filter},
          {"slack_weight", slack_weight},
          {"slack_mode", SlackModeName(slack_mode)},
          {"nominal", nominal},
          {"agent", agent.ToJson()},
          {"seeds", seeds},
          {"budget", budget},
          {"random_steps", random_steps},
          {"update_after", update_after},
          {"updates_per_step", updates_per_step},
          {"eval_every", eval_every},
          {"eval_episodes", eval_episodes},
          {"final_eval_episodes", final_eval_episodes},
          {"write_trace", write_trace}};
}

RunConfig RunConfig::FromJson(const Json& j) {
  if (j.contains("format")) RequireFormat(j, "kcbf-config", 1);
  RunConfig c = j.contains("env") ? DefaultConfig(j.at("env").get<std::string>()) : RunConfig{};
  const Json known = c.ToJson();
  for (const auto& [key, value] : j.items()) {
    KCBF_REQUIRE(known.contains(key), ErrorCode::kParse, "unknown config key '" + key + "'");
  }
  try {
    auto get = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("name", c.name);
    get("num_transitions", c.num_transitions);
    get("calibration_size", c.calibration_size);
    get("data_seed", c.data_seed);
    get("dictionary_size", c.dictionary_size);
    get("ridge_lambda", c.ridge_lambda);
    get("fit_horizon", c.fit_horizon);
    get("barrier_kind", c.barrier_kind);
    get("composite_alpha", c.composite_alpha);
    get("composite_beta", c.composite_beta);
    if (j.contains("eta")) {
      c.eta = j.at("eta").is_array() ? j.at("eta").get<std::vector<double>>()
                                     : std::vector<double>{j.at("eta").get<double>()};
    }
    get("quantile_level", c.quantile_level);
    if (j.contains("quantile_mode")) {
      c.quantile_mode = barrier::QuantileModeFromString(j.at("quantile_mode").get<std::string>());
    }
    get("use_filter", c.use_filter);
    get("slack_weight", c.slack_weight);
    if (j.contains("slack_mode")) c.slack_mode = SlackModeFromName(j.at("slack_mode").get<std::string>());
    get("nominal", c.nominal);
    if (j.contains("agent")) {
      Json merged = c.agent.ToJson();
      merged.update(j.at("agent"));
      c.agent = agent::SacConfig::FromJson(merged);
    }
    get("seeds", c.seeds);
    get("budget", c.budget);
    get("random_steps", c.random_steps);
    get("update_after", c.update_after);
    get("updates_per_step", c.updates_per_step);
    get("eval_every", c.eval_every);
    get("eval_episodes", c.eval_episodes);
    get("final_eval_episodes", c.final_eval_episodes);
    get("write_trace", c.write_trace);
  } catch (const Json::exception& e) {
    Throw(ErrorCode::kParse, std::string("config field has the wrong type: ") + e.what());
  }
  c.Validate();
  return c;
}

std::string RunConfig::Hash() const { return Fnv1aHex(ToJson().dump()); }

std::string RunConfig::RunId() const { return label() + "-" + Hash().substr(0, 8); }

int RunConfig::EffectiveCalibrationSize() const {
  return std::max(1, std::min(calibration_size, num_transitions / 5));
}

double RunConfig::EtaFor(size_t barrier_index) const {
  return eta.size() == 1 ? eta[0] : eta.at(barrier_index);
}

RunConfig LoadConfig(const std::string& path) { return RunConfig::FromJson(ReadJsonFile(path)); }

RunConfig DefaultConfig(const std::string& env) {
  RunConfig c;
  c.env = env;
  if (env.rfind("cartpole", 0) == 0) {
    c.barrier_kind = "composite";
  } else if (env.rfind("quadrotor", 0) == 0) {
    c.barrier_kind = "composite";
    c.budget = 60000;
  } else if (env == "synthetic_contact") {
    c.nominal = "pd";
  }
  c.Validate();
  return c;
}

}  // namespace kcbf::experiments
