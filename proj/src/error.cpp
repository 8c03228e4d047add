#include "ccp/error.hpp"

namespace ccp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kParse:
      return "parse";
    case ErrorCode::kValidation:
      return "validation";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kDimension:
      return "dimension";
    case ErrorCode::kPrecondition:
      return "precondition";
    case ErrorCode::kInfeasibleStart:
      return "infeasible_start";
    case ErrorCode::kBudget:
      return "budget";
    case ErrorCode::kEngine:
      return "engine";
  }
  return "unknown";
}

}  // namespace ccp
