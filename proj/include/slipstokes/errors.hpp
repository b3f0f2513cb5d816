#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slipstokes {

enum class ErrorKind {
  Size,
  Shape,
  DegenerateRegion,
  DegenerateTimeSet,
  InvalidInput,
  NotDivergenceFree,
  ForcingSupport,
  ObservabilityDegenerate,
  SynthesisFailure,
  Bracketing,
  Config,
  Internal,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for every library failure; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace slipstokes
