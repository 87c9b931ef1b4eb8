#include "qgnls/error.hpp"

namespace qgnls {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NonpositiveEdgeLength: return "NonpositiveEdgeLength";
    case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::OverlappingPeaks: return "OverlappingPeaks";
    case ErrorCode::OddNWithShift: return "OddNWithShift";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EvenN: return "EvenN";
    case ErrorCode::OddN: return "OddN";
    case ErrorCode::IndefiniteOperator: return "IndefiniteOperator";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::EigenSolveFailure: return "EigenSolveFailure";
    case ErrorCode::NegativeForm: return "NegativeForm";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace qgnls
