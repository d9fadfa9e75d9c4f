#include "common/json_util.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "common/error.hpp"

namespace kcbf {

Json NumberToJson(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double NumberFromJson(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  Throw(ErrorCode::kParse, "expected a number, got " + j.dump());
}

Json MatToJson(const Mat& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(NumberToJson(m(r, c)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat MatFromJson(const Json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const Json& data = j.at("data");
    KCBF_REQUIRE(static_cast<Eigen::Index>(data.size()) == rows * cols,
                 ErrorCode::kParse, "matrix data length does not match shape");
    Mat m(rows, cols);
    size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = NumberFromJson(data[k++]);
    }
    return m;
  } catch (const Json::exception& e) {
    Throw(ErrorCode::kParse, std::string("malformed matrix: ") + e.what());
  }
}

Json VecToJson(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(NumberToJson(v(i)));
  return out;
}

Vec VecFromJson(const Json& j) {
  KCBF_REQUIRE(j.is_array(), ErrorCode::kParse, "expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = NumberFromJson(j[i]);
  return v;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  KCBF_REQUIRE(in.good(), ErrorCode::kIo, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    Throw(ErrorCode::kParse, path + ": " + e.what());
  }
}

void WriteJsonFile(const std::string& path, const Json& j) {
  std::ofstream out(path);
  KCBF_REQUIRE(out.good(), ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
  KCBF_REQUIRE(out.good(), ErrorCode::kIo, "write failed for " + path);
}

void RequireFormat(const Json& j, const std::string& format, int version) {
  const std::string found_format = j.value("format", std::string("<missing>"));
  const int found_version = j.value("version", -1);
  if (found_format != format || found_version != version) {
    Throw(ErrorCode::kSchemaMismatch,
          "expected " + format + " v" + std::to_string(version) + ", found " +
              found_format + " v" + std::to_string(found_version));
  }
}

std::string Fnv1aHex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kcbf
