#include "shiftsel/error.hpp"

namespace shiftsel {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kCapacity: return "capacity";
    case ErrorKind::kSampling: return "sampling-failure";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace shiftsel
