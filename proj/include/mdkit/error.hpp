#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdkit {

// Error kinds raised by the library. The CLI reports `error_name(code)`.
enum class ErrorCode {
  // scene geometry
  EmptyMesh,
  DegenerateTriangle,
  NonWatertightMesh,
  SignUndecidable,
  GridTooSmall,
  CropOutsideVolume,
  // body model
  DegenerateRotation6D,
  NotARotation,
  DimensionMismatch,
  // mutual distance
  InvalidCount,
  InvalidRadius,
  EmptySurface,
  // spectral
  InvalidLength,
  LengthMismatch,
  EmptyHistory,
  // networks
  ShapeMismatch,
  ResolutionMismatch,
  NotAScalarLoss,
  GraphCycle,
  // training
  NonFiniteLoss,
  // io
  FormatError,
  IoError,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

} // namespace mdkit
