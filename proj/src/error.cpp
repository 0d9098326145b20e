#include "mdkit/error.hpp"

namespace mdkit {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::NonWatertightMesh: return "NonWatertightMesh";
    case ErrorCode::SignUndecidable: return "SignUndecidable";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::CropOutsideVolume: return "CropOutsideVolume";
    case ErrorCode::DegenerateRotation6D: return "DegenerateRotation6D";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
    case ErrorCode::EmptySurface: return "EmptySurface";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::NotAScalarLoss: return "NotAScalarLoss";
    case ErrorCode::GraphCycle: return "GraphCycle";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

} // namespace mdkit
