#pragma once

#include <string>

#include "common/json_util.hpp"
#include "koopman/model.hpp"

namespace kcbf::koopman {

inline constexpr const char* kModelFormat = "kcbf-koopman-model";
inline constexpr int kModelVersion = 1;

Json ModelToJson(const KoopmanModel& model);
KoopmanModel ModelFromJson(const Json& j);

void SaveModel(const KoopmanModel& model, const std::string& path);
KoopmanModel LoadModel(const std::string& path);

}  // namespace kcbf::koopman
