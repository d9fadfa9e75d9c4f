#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kcbf/kcbf.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  std::string env;
  std::string nominal;
  bool no_filter = false;
};

struct Failure {
  kcbf_status status;
};

void Check(kcbf_status st) {
  if (st != KCBF_OK) throw Failure{st};
}

std::string Take(char* s) {
  if (!s) return {};
  std::string out(s);
  kcbf_string_free(s);
  return out;
}

class Config {
 public:
  Config(const CommonOptions& o, const char* default_env) {
    if (!o.config_path.empty()) {
      Check(kcbf_config_load(o.config_path.c_str(), &cfg_));
      if (!o.env.empty()) Patch({{"env", o.env}});
    } else {
      Check(kcbf_config_default(o.env.empty() ? default_env : o.env.c_str(), &cfg_));
    }
    if (o.seed) Patch({{"seeds", {*o.seed}}});
    if (!o.nominal.empty()) Patch({{"nominal", o.nominal}});
    if (o.no_filter) Patch({{"use_filter", false}});
  }
  ~Config() { kcbf_config_free(cfg_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  void Patch(const Json& j) { Check(kcbf_config_update(cfg_, j.dump().c_str())); }
  Json ToJson() const {
    char* s = nullptr;
    Check(kcbf_config_to_json(cfg_, &s));
    return Json::parse(Take(s));
  }
  const kcbf_config* get() const { return cfg_; }

 private:
  kcbf_config* cfg_ = nullptr;
};

void AddCommon(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "run config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "run a single seed");
  cmd->add_option("--out", o.out, "output root")->capture_default_str();
  cmd->add_option("--env", o.env, "cartpole_stabilize, cartpole_track, quadrotor_hover, "
                                  "quadrotor_track or synthetic_contact");
  cmd->add_option("--nominal", o.nominal, "nominal policy")
      ->check(CLI::IsMember({"lqr", "pd", "agent"}));
  cmd->add_flag("--no-filter", o.no_filter, "apply the nominal action unfiltered");
}

void PrintDir(const char* what, char* dir) { std::cout << what << ' ' << Take(dir) << '\n'; }

std::vector<std::string> FindSummaries(const std::vector<std::string>& inputs,
                                       const std::string& out_root) {
  std::vector<std::string> paths;
  auto add_dir = [&](const fs::path& d) {
    if (fs::exists(d / "summary.json")) paths.push_back((d / "summary.json").string());
  };
  if (inputs.empty()) {
    if (fs::is_directory(out_root)) {
      for (const auto& e : fs::directory_iterator(out_root)) {
        if (e.is_directory()) add_dir(e.path());
      }
    }
    std::sort(paths.begin(), paths.end());
    return paths;
  }
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      add_dir(in);
    } else {
      paths.push_back(in);
    }
  }
  return paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman control barrier function safety filter toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kcbf_version()));

  CommonOptions common;
  int episodes = 0;
  std::vector<double> etas{0.5, 0.7, 0.9, 0.99};
  std::vector<std::string> inputs;

  auto* collect = app.add_subcommand("collect", "sample transitions and write transitions.csv");
  auto* fit = app.add_subcommand("fit", "fit the lifted model and write model.json");
  auto* calibrate =
      app.add_subcommand("calibrate", "fit and calibrate; writes model.json and calibration.json");
  auto* train = app.add_subcommand("train", "full run: model, calibration, training, evaluation");
  auto* eval = app.add_subcommand("eval", "evaluate the nominal law or a trained checkpoint");
  auto* ablate = app.add_subcommand("ablate", "sweep the decay rate on the synthetic plant");
  auto* report = app.add_subcommand("report", "rank margin against violation across runs");
  for (auto* cmd : {collect, fit, calibrate, train, eval, ablate, report}) AddCommon(cmd, common);
  eval->add_option("--episodes", episodes, "episodes (default: final_eval_episodes)");
  ablate->add_option("--etas", etas, "decay rates in (0, 1]")->delimiter(',')->capture_default_str();
  report->add_option("--in", inputs, "summary.json files or run directories (default: all under --out)");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string out = common.out;
    if (report->parsed()) {
      const auto paths = FindSummaries(inputs, out);
      std::vector<const char*> c_paths;
      for (const auto& p : paths) c_paths.push_back(p.c_str());
      fs::create_directories(out);
      const std::string csv = (fs::path(out) / "rho.csv").string();
      char* result = nullptr;
      Check(kcbf_report(c_paths.data(), c_paths.size(), csv.c_str(), &result));
      std::cout << Take(result) << '\n';
      std::cout << "wrote " << csv << '\n';
      return 0;
    }

    Config cfg(common, ablate->parsed() ? "synthetic_contact" : "cartpole_stabilize");
    if (collect->parsed()) {
      char* dir = nullptr;
      Check(kcbf_collect(cfg.get(), out.c_str(), &dir));
      PrintDir("wrote transitions to", dir);
    } else if (fit->parsed()) {
      char* dir = nullptr;
      Check(kcbf_fit(cfg.get(), out.c_str(), &dir));
      PrintDir("wrote model to", dir);
    } else if (calibrate->parsed()) {
      char* dir = nullptr;
      Check(kcbf_calibrate(cfg.get(), out.c_str(), &dir));
      PrintDir("wrote model and calibration to", dir);
    } else if (train->parsed()) {
      char* dir = nullptr;
      char* summary = nullptr;
      Check(kcbf_train(cfg.get(), out.c_str(), &dir, &summary));
      const std::string s = Take(summary);
      if (!s.empty()) std::cout << Json::parse(s).at("aggregate").dump(2) << '\n';
      PrintDir("run directory", dir);
    } else if (eval->parsed()) {
      const Json j = cfg.ToJson();
      const std::uint64_t seed = common.seed ? *common.seed : j.at("seeds")[0].get<std::uint64_t>();
      if (episodes <= 0) episodes = j.at("final_eval_episodes").get<int>();
      char* summary = nullptr;
      Check(kcbf_eval(cfg.get(), out.c_str(), seed, episodes, &summary));
      std::cout << Take(summary) << '\n';
    } else if (ablate->parsed()) {
      char* result = nullptr;
      Check(kcbf_ablate(cfg.get(), etas.data(), etas.size(), out.c_str(), &result));
      std::cout << Take(result) << '\n';
      std::cout << "wrote " << (fs::path(out) / "ablation.csv").string() << '\n';
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << kcbf_status_name(f.status) << ": " << kcbf_last_error() << '\n';
    return 1 + static_cast<int>(f.status) % 100;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
