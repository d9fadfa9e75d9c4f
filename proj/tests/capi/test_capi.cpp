#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"

#include "common/json_util.hpp"
#include "experiments/config.hpp"
#include "experiments/stages.hpp"
#include "kcbf/kcbf.h"

extern "C" int kcbf_c_header_probe(void);

namespace fs = std::filesystem;

namespace {

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kcbf_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  kcbf_string_free(s);
  return out;
}

kcbf_config* SmallSynthetic() {
  kcbf_config* cfg = nullptr;
  REQUIRE(kcbf_config_default("synthetic_contact", &cfg) == KCBF_OK);
  REQUIRE(kcbf_config_update(cfg, R"({"num_transitions": 2000, "dictionary_size": 8,
      "seeds": [0], "budget": 1, "final_eval_episodes": 4})") == KCBF_OK);
  return cfg;
}

}  // namespace

TEST_CASE("header compiles as C and basic metadata is available") {
  CHECK(kcbf_c_header_probe() == 1);
  CHECK(std::string(kcbf_version()) == "1.0.0");
  CHECK(std::string(kcbf_status_name(KCBF_INFEASIBLE)) == "Infeasible");
  CHECK(std::string(kcbf_status_name(KCBF_OK)) == "Ok");
}

TEST_CASE("config handles report errors through status and last error") {
  kcbf_config* cfg = nullptr;
  CHECK(kcbf_config_default("walker", &cfg) == KCBF_UNKNOWN_KIND);
  CHECK(cfg == nullptr);
  CHECK(std::string(kcbf_last_error()).find("walker") != std::string::npos);

  CHECK(kcbf_config_default(nullptr, &cfg) == KCBF_INVALID_ARGUMENT);
  REQUIRE(kcbf_config_default("cartpole_track", &cfg) == KCBF_OK);
  CHECK(std::string(kcbf_last_error()).empty());

  char* before = nullptr;
  REQUIRE(kcbf_config_to_json(cfg, &before) == KCBF_OK);
  const std::string json_before = Take(before);
  CHECK(kcbf_config_update(cfg, R"({"typo": 1})") == KCBF_PARSE);
  CHECK(kcbf_config_update(cfg, R"({"eta": [2.0]})") == KCBF_INVALID_ARGUMENT);
  CHECK(kcbf_config_update(cfg, "not json") == KCBF_PARSE);
  char* after = nullptr;
  REQUIRE(kcbf_config_to_json(cfg, &after) == KCBF_OK);
  CHECK(Take(after) == json_before);

  REQUIRE(kcbf_config_update(cfg, R"({"use_filter": false, "agent": {"lr": 0.001}})") == KCBF_OK);
  char* id = nullptr;
  REQUIRE(kcbf_config_run_id(cfg, &id) == KCBF_OK);
  const auto expected = kcbf::experiments::RunConfig::FromJson(
      {{"env", "cartpole_track"}, {"use_filter", false}, {"agent", {{"lr", 0.001}}}});
  CHECK(Take(id) == expected.RunId());

  kcbf_config* copy = nullptr;
  char* text = nullptr;
  REQUIRE(kcbf_config_to_json(cfg, &text) == KCBF_OK);
  REQUIRE(kcbf_config_from_json(text, &copy) == KCBF_OK);
  char* id2 = nullptr;
  REQUIRE(kcbf_config_run_id(copy, &id2) == KCBF_OK);
  CHECK(Take(id2) == expected.RunId());
  kcbf_string_free(text);
  kcbf_config_free(copy);
  kcbf_config_free(cfg);
}

TEST_CASE("safety handle reproduces the core filter") {
  const fs::path out = TempDir("safety");
  kcbf_config* cfg = SmallSynthetic();
  char* dir = nullptr;
  REQUIRE(kcbf_calibrate(cfg, out.string().c_str(), &dir) == KCBF_OK);
  const std::string run_dir = Take(dir);
  CHECK(fs::exists(fs::path(run_dir) / "calibration.json"));

  kcbf_safety* s = nullptr;
  REQUIRE(kcbf_safety_load(run_dir.c_str(), &s) == KCBF_OK);
  size_t ny = 0, nz = 0, nu = 0, nb = 0;
  REQUIRE(kcbf_safety_dims(s, &ny, &nz, &nu, &nb) == KCBF_OK);
  CHECK(ny == 1);
  CHECK(nz == 9);  // state plus 8 features
  CHECK(nu == 1);
  CHECK(nb == 1);

  char* cfg_json = nullptr;
  REQUIRE(kcbf_config_to_json(cfg, &cfg_json) == KCBF_OK);
  const auto rc = kcbf::experiments::RunConfig::FromJson(kcbf::Json::parse(Take(cfg_json)));
  const auto core = kcbf::experiments::LoadSafetyModel(rc, run_dir);

  for (double v : {-2.0, 0.0, 0.5, 0.95, 1.2}) {
    CAPTURE(v);
    const double y[1] = {v};
    std::vector<double> z(nz);
    REQUIRE(kcbf_safety_lift(s, y, z.data()) == KCBF_OK);
    const kcbf::Vec zc = core.model.Lift(kcbf::Vec::Constant(1, v));
    for (size_t i = 0; i < nz; ++i) CHECK(z[i] == zc(static_cast<Eigen::Index>(i)));
    double h = 0.0;
    REQUIRE(kcbf_safety_barriers(s, y, &h) == KCBF_OK);
    CHECK(h == core.barriers[0].Evaluate(zc));

    const double u_nom[1] = {1.0};
    double u_safe[1] = {0.0}, xi[1] = {0.0};
    kcbf_certificate cert = KCBF_CERT_ENFORCED;
    REQUIRE(kcbf_safety_filter(s, y, u_nom, u_safe, xi, &cert) == KCBF_OK);
    const auto ref = kcbf::filter::FilterAction(core.model, core.barriers, zc,
                                                kcbf::Vec::Constant(1, 1.0),
                                                kcbf::Box::Symmetric(1, 1.0),
                                                kcbf::experiments::MakeFilterOptions(rc));
    CHECK(u_safe[0] == ref.u_safe(0));
    CHECK(xi[0] == ref.xi(0));
    CHECK(static_cast<int>(cert) == static_cast<int>(ref.certificate));
    CHECK(u_safe[0] >= -1.0);
    CHECK(u_safe[0] <= 1.0);
  }
  const double bad_u[1] = {std::nan("")};
  const double y[1] = {0.0};
  double u_safe[1];
  CHECK(kcbf_safety_filter(s, y, bad_u, u_safe, nullptr, nullptr) == KCBF_NON_FINITE_STATE);
  CHECK(kcbf_safety_filter(s, nullptr, bad_u, u_safe, nullptr, nullptr) == KCBF_INVALID_ARGUMENT);
  kcbf_safety_free(s);

  kcbf_safety* missing = nullptr;
  CHECK(kcbf_safety_load((out / "nope").string().c_str(), &missing) == KCBF_IO);
  CHECK(missing == nullptr);
  kcbf_config_free(cfg);
}

TEST_CASE("stage entry points write their artifacts") {
  const fs::path out = TempDir("stages");
  kcbf_config* cfg = SmallSynthetic();
  char* dir = nullptr;
  REQUIRE(kcbf_collect(cfg, out.string().c_str(), &dir) == KCBF_OK);
  const fs::path run_dir = Take(dir);
  CHECK(fs::exists(run_dir / "transitions.csv"));
  REQUIRE(kcbf_fit(cfg, out.string().c_str(), nullptr) == KCBF_OK);
  CHECK(fs::exists(run_dir / "model.json"));

  char* summary = nullptr;
  REQUIRE(kcbf_train(cfg, out.string().c_str(), nullptr, &summary) == KCBF_OK);
  const kcbf::Json sj = kcbf::Json::parse(Take(summary));
  CHECK(sj.at("format") == "kcbf-summary");

  char* eval = nullptr;
  REQUIRE(kcbf_eval(cfg, out.string().c_str(), 0, 4, &eval) == KCBF_OK);
  const kcbf::Json ej = kcbf::Json::parse(Take(eval));
  CHECK(ej.at("violation_rate") == sj.at("seeds")[0].at("final").at("violation_rate"));

  const std::string path = (run_dir / "summary.json").string();
  const char* paths[] = {path.c_str()};
  char* report = nullptr;
  REQUIRE(kcbf_report(paths, 1, (out / "rho.csv").string().c_str(), &report) == KCBF_OK);
  const kcbf::Json rj = kcbf::Json::parse(Take(report));
  CHECK(rj.at("rows").size() == 1);
  CHECK(rj.at("rank_test_run") == false);
  CHECK(fs::exists(out / "rho.csv"));

  CHECK(kcbf_ablate(cfg, nullptr, 0, out.string().c_str(), nullptr) == KCBF_INVALID_ARGUMENT);
  const double etas[] = {0.9};
  char* abl = nullptr;
  REQUIRE(kcbf_ablate(cfg, etas, 1, out.string().c_str(), &abl) == KCBF_OK);
  CHECK(kcbf::Json::parse(Take(abl)).at("rows").size() == 1);
  CHECK(fs::exists(out / "ablation.csv"));

  REQUIRE(kcbf_config_update(cfg, R"({"num_transitions": 20, "dictionary_size": 32})") == KCBF_OK);
  CHECK(kcbf_train(cfg, out.string().c_str(), nullptr, nullptr) != KCBF_OK);
  CHECK_FALSE(std::string(kcbf_last_error()).empty());
  kcbf_config_free(cfg);
}
