#include "tiltcross/error.hpp"

namespace tiltcross {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NoInteriorMinimum: return "NoInteriorMinimum";
        case ErrorCode::ZeroNotFound: return "ZeroNotFound";
        case ErrorCode::ZeroOutsideStrip: return "ZeroOutsideStrip";
        case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
        case ErrorCode::GridNotPowerOfTwo: return "GridNotPowerOfTwo";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::ZeroNorm: return "ZeroNorm";
        case ErrorCode::ShiftOffGrid: return "ShiftOffGrid";
        case ErrorCode::CrossingNotReached: return "CrossingNotReached";
        case ErrorCode::EdgeMassExceeded: return "EdgeMassExceeded";
        case ErrorCode::NoSolution: return "NoSolution";
        case ErrorCode::CutoffRegion: return "CutoffRegion";
        case ErrorCode::ConstraintViolated: return "ConstraintViolated";
        case ErrorCode::SmoothnessLost: return "SmoothnessLost";
        case ErrorCode::ResidualAboveTolerance: return "ResidualAboveTolerance";
        case ErrorCode::DegenerateTerm: return "DegenerateTerm";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace tiltcross
