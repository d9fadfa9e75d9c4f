#include "koopman/serialize.hpp"

#include "common/error.hpp"

namespace kcbf::koopman {

Json ModelToJson(const KoopmanModel& model) {
  const Dictionary& d = model.dictionary;
  Json centers = Json::array();
  for (const Vec& c : d.centers()) centers.push_back(VecToJson(c));
  Json bandwidths = Json::array();
  for (double s : d.bandwidths()) bandwidths.push_back(s);
  return {
      {"format", kModelFormat},
      {"version", kModelVersion},
      {"dictionary",
       {{"state_dim", d.state_dim()},
        {"centers", centers},
        {"bandwidths", bandwidths}}},
      {"A", MatToJson(model.A)},
      {"B", MatToJson(model.B)},
      {"ridge_lambda", model.ridge_lambda},
      {"fit_mse1", NumberToJson(model.fit_mse1)},
      {"fit_mseH", NumberToJson(model.fit_mseH)},
      {"horizon", model.horizon},
      {"num_samples", model.num_samples},
  };
}

KoopmanModel ModelFromJson(const Json& j) {
  RequireFormat(j, kModelFormat, kModelVersion);
  try {
    const Json& jd = j.at("dictionary");
    std::vector<Vec> centers;
    for (const Json& c : jd.at("centers")) centers.push_back(VecFromJson(c));
    std::vector<double> bandwidths = jd.at("bandwidths").get<std::vector<double>>();
    KoopmanModel m;
    m.dictionary = Dictionary(jd.at("state_dim").get<int>(), std::move(centers),
                              std::move(bandwidths));
    m.A = MatFromJson(j.at("A"));
    m.B = MatFromJson(j.at("B"));
    m.ridge_lambda = j.at("ridge_lambda").get<double>();
    m.fit_mse1 = NumberFromJson(j.at("fit_mse1"));
    m.fit_mseH = NumberFromJson(j.at("fit_mseH"));
    m.horizon = j.at("horizon").get<int>();
    m.num_samples = j.at("num_samples").get<int>();
    const auto nz = m.dictionary.lifted_dim();
    KCBF_REQUIRE(m.A.rows() == nz && m.A.cols() == nz && m.B.rows() == nz,
                 ErrorCode::kParse, "model matrices do not match the dictionary");
    return m;
  } catch (const Json::exception& e) {
    Throw(ErrorCode::kParse, std::string("malformed model: ") + e.what());
  }
}

void SaveModel(const KoopmanModel& model, const std::string& path) {
  WriteJsonFile(path, ModelToJson(model));
}

KoopmanModel LoadModel(const std::string& path) {
  return ModelFromJson(ReadJsonFile(path));
}

}  // namespace kcbf::koopman
