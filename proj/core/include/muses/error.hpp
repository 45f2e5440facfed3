#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace muses {

enum class Errc {
  InvalidInput,
  EmptySkeleton,
  DegenerateGeometry,
  ClassificationAmbiguous,
  PlanRejected,
  DisconnectedResult,
  UnmappedJoint,
  EmptyMesh,
  AllZeroWeights,
  OutOfBounds,
  BackendUnavailable,
  BackendTimeout,
  MalformedResponse,
  StructureViolation,
  FormatError,
  ConfigError,
};

std::string_view to_string(Errc code);

// Every failure in the engine is reported through this exception. `details`
// carries per-item diagnostics, e.g. the full violation list of a rejected plan.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::vector<std::string> details = {});

  [[nodiscard]] Errc code() const noexcept { return code_; }
  [[nodiscard]] const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  Errc code_;
  std::vector<std::string> details_;
};

}  // namespace muses
