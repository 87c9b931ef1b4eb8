#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qgnls {

/// Failure categories raised by the library. The numeric values are mirrored
/// one-to-one by `qgnls_status` in the C API.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Io,
  Parse,
  DisconnectedGraph,
  NonpositiveEdgeLength,
  DanglingEndpoint,
  UnknownVertex,
  OverlappingPeaks,
  OddNWithShift,
  IndexOutOfRange,
  QuadratureNotConverged,
  DimensionMismatch,
  EvenN,
  OddN,
  IndefiniteOperator,
  SolveFailure,
  EigenSolveFailure,
  NegativeForm,
  SingularJacobian,
  NotConverged,
  Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qgnls
