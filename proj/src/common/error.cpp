#include "common/error.hpp"

namespace kcbf {

const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSingularGram: return "SingularGram";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kIndexOutOfStateBlock: return "IndexOutOfStateBlock";
    case ErrorCode::kNonpositiveWeights: return "NonpositiveWeights";
    case ErrorCode::kEmptyCalibrationSet: return "EmptyCalibrationSet";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kUnknownKind: return "UnknownKind";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyLog: return "EmptyLog";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kActionEchoMismatch: return "ActionEchoMismatch";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

}  // namespace kcbf
