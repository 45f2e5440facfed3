#include "muses/error.hpp"

namespace muses {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::EmptySkeleton: return "EmptySkeleton";
    case Errc::DegenerateGeometry: return "DegenerateGeometry";
    case Errc::ClassificationAmbiguous: return "ClassificationAmbiguous";
    case Errc::PlanRejected: return "PlanRejected";
    case Errc::DisconnectedResult: return "DisconnectedResult";
    case Errc::UnmappedJoint: return "UnmappedJoint";
    case Errc::EmptyMesh: return "EmptyMesh";
    case Errc::AllZeroWeights: return "AllZeroWeights";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::BackendTimeout: return "BackendTimeout";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::StructureViolation: return "StructureViolation";
    case Errc::FormatError: return "FormatError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::vector<std::string> details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

}  // namespace muses
