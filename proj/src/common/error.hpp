#pragma once

#include <stdexcept>
#include <string>

namespace kcbf {

// Numeric values are part of the C ABI (see include/kcbf/kcbf.h); append only.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kSingularGram = 2,
  kInfeasible = 3,
  kMaxIterations = 4,
  kNoConvergence = 5,
  kDegenerateData = 6,
  kIndexOutOfStateBlock = 7,
  kNonpositiveWeights = 8,
  kEmptyCalibrationSet = 9,
  kNonFiniteState = 10,
  kUnknownKind = 11,
  kNonFiniteLoss = 12,
  kEmptyLog = 13,
  kIo = 14,
  kParse = 15,
  kSchemaMismatch = 16,
  kActionEchoMismatch = 17,
  kInternal = 99,
};

const char* ToString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Throw(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

#define KCBF_REQUIRE(cond, code, msg)                   \
  do {                                                  \
    if (!(cond)) ::kcbf::Throw((code), (msg));          \
  } while (0)

}  // namespace kcbf
