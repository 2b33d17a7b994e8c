#include "error.hpp"

namespace avds {

const char* error_class_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::Convergence: return "convergence";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
  }
  return "unknown";
}

}  // namespace avds
