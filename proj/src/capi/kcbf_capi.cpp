#include "kcbf/kcbf.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "common/error.hpp"
#include "common/json_util.hpp"
#include "experiments/artifacts.hpp"
#include "experiments/config.hpp"
#include "experiments/pipeline.hpp"
#include "experiments/stages.hpp"
#include "filter/safety_filter.hpp"

struct kcbf_config {
  kcbf::experiments::RunConfig value;
};

struct kcbf_safety {
  kcbf::experiments::RunConfig config;
  kcbf::experiments::SafetyModel safety;
  kcbf::Box box;
};

namespace {

using kcbf::ErrorCode;
namespace ex = kcbf::experiments;

static_assert(static_cast<int>(kcbf::filter::Certificate::kInfiniteRho) == KCBF_CERT_INFINITE_RHO);
static_assert(static_cast<int>(ErrorCode::kActionEchoMismatch) == KCBF_ACTION_ECHO_MISMATCH);

thread_local std::string g_last_error;

kcbf_status Fail(kcbf_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename F>
kcbf_status Guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return KCBF_OK;
  } catch (const kcbf::Error& e) {
    return Fail(static_cast<kcbf_status>(e.code()), e.what());
  } catch (const kcbf::Json::exception& e) {
    return Fail(KCBF_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Fail(KCBF_IO, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(KCBF_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(KCBF_INTERNAL, e.what());
  } catch (...) {
    return Fail(KCBF_INTERNAL, "unknown exception");
  }
}

void Require(bool ok, const char* what) {
  KCBF_REQUIRE(ok, ErrorCode::kInvalidArgument, std::string("null argument: ") + what);
}

char* Dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void Put(char** out, const std::string& s) {
  if (out) *out = Dup(s);
}

kcbf::Vec View(const double* p, size_t n) {
  return Eigen::Map<const kcbf::Vec>(p, static_cast<Eigen::Index>(n));
}

}  // namespace

extern "C" {

const char* kcbf_version(void) { return "1.0.0"; }

const char* kcbf_last_error(void) { return g_last_error.c_str(); }

const char* kcbf_status_name(kcbf_status status) {
  return kcbf::ToString(static_cast<ErrorCode>(status));
}

void kcbf_string_free(char* s) { std::free(s); }

kcbf_status kcbf_config_default(const char* env, kcbf_config** out) {
  return Guard([&] {
    Require(env && out, "env/out");
    *out = new kcbf_config{ex::DefaultConfig(env)};
  });
}

kcbf_status kcbf_config_load(const char* path, kcbf_config** out) {
  return Guard([&] {
    Require(path && out, "path/out");
    *out = new kcbf_config{ex::LoadConfig(path)};
  });
}

kcbf_status kcbf_config_from_json(const char* json, kcbf_config** out) {
  return Guard([&] {
    Require(json && out, "json/out");
    *out = new kcbf_config{ex::RunConfig::FromJson(kcbf::Json::parse(json))};
  });
}

kcbf_status kcbf_config_update(kcbf_config* cfg, const char* json_patch) {
  return Guard([&] {
    Require(cfg && json_patch, "cfg/json_patch");
    const kcbf::Json patch = kcbf::Json::parse(json_patch);
    KCBF_REQUIRE(patch.is_object(), ErrorCode::kParse, "patch must be a JSON object");
    kcbf::Json j = cfg->value.ToJson();
    j.merge_patch(patch);
    cfg->value = ex::RunConfig::FromJson(j);
  });
}

kcbf_status kcbf_config_to_json(const kcbf_config* cfg, char** out) {
  return Guard([&] {
    Require(cfg && out, "cfg/out");
    *out = Dup(cfg->value.ToJson().dump(2));
  });
}

kcbf_status kcbf_config_run_id(const kcbf_config* cfg, char** out) {
  return Guard([&] {
    Require(cfg && out, "cfg/out");
    *out = Dup(cfg->value.RunId());
  });
}

void kcbf_config_free(kcbf_config* cfg) { delete cfg; }

kcbf_status kcbf_collect(const kcbf_config* cfg, const char* out_root, char** run_dir) {
  return Guard([&] {
    Require(cfg && out_root, "cfg/out_root");
    Put(run_dir, ex::CollectStage(cfg->value, out_root));
  });
}

kcbf_status kcbf_fit(const kcbf_config* cfg, const char* out_root, char** run_dir) {
  return Guard([&] {
    Require(cfg && out_root, "cfg/out_root");
    Put(run_dir, ex::FitStage(cfg->value, out_root));
  });
}

kcbf_status kcbf_calibrate(const kcbf_config* cfg, const char* out_root, char** run_dir) {
  return Guard([&] {
    Require(cfg && out_root, "cfg/out_root");
    Put(run_dir, ex::CalibrateStage(cfg->value, out_root));
  });
}

kcbf_status kcbf_train(const kcbf_config* cfg, const char* out_root, char** run_dir,
                       char** summary) {
  return Guard([&] {
    Require(cfg && out_root, "cfg/out_root");
    const ex::RunResult r = ex::RunPipeline(cfg->value, out_root);
    if (summary) *summary = r.summary.is_null() ? nullptr : Dup(r.summary.dump(2));
    Put(run_dir, r.directory);
  });
}

kcbf_status kcbf_eval(const kcbf_config* cfg, const char* out_root, uint64_t seed, int episodes,
                      char** summary) {
  return Guard([&] {
    Require(cfg && out_root, "cfg/out_root");
    const ex::EvalResult r = ex::EvalStage(cfg->value, out_root, seed, episodes);
    kcbf::Json j = r.summary.ToJson();
    j["seed"] = seed;
    j["directory"] = r.directory;
    Put(summary, j.dump(2));
  });
}

kcbf_status kcbf_ablate(const kcbf_config* cfg, const double* etas, size_t num_etas,
                        const char* out_root, char** result) {
  return Guard([&] {
    Require(cfg && out_root && (etas || num_etas == 0), "cfg/etas/out_root");
    const std::vector<double> list(etas, etas + num_etas);
    const ex::AblationResult a = ex::AblateEta(cfg->value, list, out_root);
    ex::WriteAblationCsv((std::filesystem::path(out_root) / "ablation.csv").string(),
                         cfg->value.Hash(), a);
    kcbf::Json rows = kcbf::Json::array();
    for (const auto& r : a.rows) {
      rows.push_back({{"eta", r.eta},
                      {"run_id", r.run_id},
                      {"return_mean", kcbf::NumberToJson(r.return_mean)},
                      {"violation_rate", r.violation_rate},
                      {"intervention_rate", r.intervention_rate},
                      {"slack_rate", r.slack_rate}});
    }
    Put(result, kcbf::Json{{"rows", rows}, {"trend_holds", a.trend_holds}}.dump(2));
  });
}

kcbf_status kcbf_report(const char* const* summary_paths, size_t num_paths, const char* out_csv,
                        char** result) {
  return Guard([&] {
    Require(summary_paths || num_paths == 0, "summary_paths");
    std::vector<kcbf::Json> summaries;
    for (size_t i = 0; i < num_paths; ++i) {
      Require(summary_paths[i], "summary path");
      summaries.push_back(kcbf::ReadJsonFile(summary_paths[i]));
    }
    const ex::RhoReport rep = ex::RhoEffectReport(summaries);
    if (out_csv) ex::WriteRhoCsv(out_csv, rep);
    kcbf::Json rows = kcbf::Json::array();
    for (const auto& r : rep.rows) {
      rows.push_back({{"run_id", r.run_id},
                      {"env", r.env},
                      {"rho", kcbf::NumberToJson(r.rho)},
                      {"violation_rate", r.violation_rate}});
    }
    Put(result, kcbf::Json{{"rows", rows},
                           {"rank_test_run", rep.rank_test_run},
                           {"rank_test_passed", rep.rank_test_passed},
                           {"note", rep.note}}
                    .dump(2));
  });
}

kcbf_status kcbf_safety_load(const char* run_dir, kcbf_safety** out) {
  return Guard([&] {
    Require(run_dir && out, "run_dir/out");
    const std::filesystem::path dir(run_dir);
    auto s = std::make_unique<kcbf_safety>();
    s->config = ex::LoadConfig((dir / "config.json").string());
    s->safety = ex::LoadSafetyModel(s->config, run_dir);
    s->box = kcbf::envs::MakeEnv(s->config.env)->spec().action_box;
    *out = s.release();
  });
}

kcbf_status kcbf_safety_dims(const kcbf_safety* s, size_t* model_state_dim, size_t* lifted_dim,
                             size_t* action_dim, size_t* num_barriers) {
  return Guard([&] {
    Require(s, "s");
    const auto& m = s->safety.model;
    if (model_state_dim) *model_state_dim = static_cast<size_t>(m.dictionary.state_dim());
    if (lifted_dim) *lifted_dim = static_cast<size_t>(m.lifted_dim());
    if (action_dim) *action_dim = static_cast<size_t>(m.action_dim());
    if (num_barriers) *num_barriers = s->safety.barriers.size();
  });
}

kcbf_status kcbf_safety_lift(const kcbf_safety* s, const double* y, double* z) {
  return Guard([&] {
    Require(s && y && z, "s/y/z");
    const auto& m = s->safety.model;
    const kcbf::Vec zz = m.Lift(View(y, static_cast<size_t>(m.dictionary.state_dim())));
    std::copy(zz.data(), zz.data() + zz.size(), z);
  });
}

kcbf_status kcbf_safety_barriers(const kcbf_safety* s, const double* y, double* h) {
  return Guard([&] {
    Require(s && y && h, "s/y/h");
    const auto& m = s->safety.model;
    const kcbf::Vec z = m.Lift(View(y, static_cast<size_t>(m.dictionary.state_dim())));
    for (size_t j = 0; j < s->safety.barriers.size(); ++j) h[j] = s->safety.barriers[j].Evaluate(z);
  });
}

kcbf_status kcbf_safety_filter(const kcbf_safety* s, const double* y, const double* u_nom,
                               double* u_safe, double* xi, kcbf_certificate* certificate) {
  return Guard([&] {
    Require(s && y && u_nom && u_safe, "s/y/u_nom/u_safe");
    const auto& m = s->safety.model;
    const kcbf::Vec z = m.Lift(View(y, static_cast<size_t>(m.dictionary.state_dim())));
    const kcbf::Vec u = View(u_nom, static_cast<size_t>(m.action_dim()));
    KCBF_REQUIRE(u.allFinite(), ErrorCode::kNonFiniteState, "u_nom is not finite");
    const kcbf::filter::FilterResult r = kcbf::filter::FilterAction(
        m, s->safety.barriers, z, u, s->box, ex::MakeFilterOptions(s->config));
    std::copy(r.u_safe.data(), r.u_safe.data() + r.u_safe.size(), u_safe);
    if (xi) std::copy(r.xi.data(), r.xi.data() + r.xi.size(), xi);
    if (certificate) *certificate = static_cast<kcbf_certificate>(r.certificate);
  });
}

void kcbf_safety_free(kcbf_safety* s) { delete s; }

}  // extern "C"
