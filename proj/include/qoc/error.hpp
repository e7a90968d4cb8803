#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qoc {

enum class ErrorCode {
  InvalidSystem,
  InvalidControl,
  InvalidBoundary,
  GridMismatch,
  DimensionExceeded,
  DimensionMismatch,
  PhaseUndefined,
  AdmissibilityResidualExceeded,
  SupportOverlap,
  EndpointMismatch,
  MissingWeight,
  WrongKind,
  NotControllable,
  NoConvergence,
  MixedWindow,
  NoneFound,
  NotConnected,
  InconsistentState,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. `code()` identifies the violated contract;
/// the message carries the detail (invariant name, offending value).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qoc
