#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shiftsel {

enum class ErrorKind {
  kInvalidArgument,
  kDegenerateInput,
  kInfeasible,
  kCapacity,
  kSampling,
  kDivergence,
  kParse,
  kSchema,
  kUnsupported,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a category so the CLI can
/// map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace shiftsel
