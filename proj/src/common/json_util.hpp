#pragma once

#include <string>

#include "common/types.hpp"
#include "json.hpp"

namespace kcbf {

using Json = nlohmann::json;

// Non-finite doubles are written as the strings "inf", "-inf" and "nan";
// JSON has no literal for them.
Json NumberToJson(double v);
double NumberFromJson(const Json& j);

// {"rows": r, "cols": c, "data": [row-major]}
Json MatToJson(const Mat& m);
Mat MatFromJson(const Json& j);
Json VecToJson(const Vec& v);
Vec VecFromJson(const Json& j);

// Reads/writes whole files; throws Io / Parse errors.
Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& j);

// Checks {"format": format, "version": version}; throws SchemaMismatch.
void RequireFormat(const Json& j, const std::string& format, int version);

// 64-bit FNV-1a of a string, rendered as 16 hex digits.
std::string Fnv1aHex(const std::string& text);

}  // namespace kcbf
