#include "slipstokes/errors.hpp"

namespace slipstokes {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Size: return "size";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::DegenerateRegion: return "degenerate-region";
    case ErrorKind::DegenerateTimeSet: return "degenerate-time-set";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::NotDivergenceFree: return "not-divergence-free";
    case ErrorKind::ForcingSupport: return "forcing-support";
    case ErrorKind::ObservabilityDegenerate: return "observability-degenerate";
    case ErrorKind::SynthesisFailure: return "synthesis-failure";
    case ErrorKind::Bracketing: return "bracketing";
    case ErrorKind::Config: return "config";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace slipstokes
