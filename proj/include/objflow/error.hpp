#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace objflow {

enum class ErrorKind {
  kInvalidArgument,
  kInvalidDepth,
  kOutOfBounds,
  kDegenerateCorrespondence,
  kDegenerateGeometry,
  kRankDeficient,
  kCalibrationFailure,
  kMatchingFailure,
  kNoGrasp,
  kNoTarget,
  kPlanningFailure,
  kValidation,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kInvalidDepth: return "invalid-depth";
    case ErrorKind::kOutOfBounds: return "out-of-bounds";
    case ErrorKind::kDegenerateCorrespondence: return "degenerate-correspondence";
    case ErrorKind::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::kRankDeficient: return "rank-deficient";
    case ErrorKind::kCalibrationFailure: return "calibration-failure";
    case ErrorKind::kMatchingFailure: return "matching-failure";
    case ErrorKind::kNoGrasp: return "no-grasp";
    case ErrorKind::kNoTarget: return "no-target";
    case ErrorKind::kPlanningFailure: return "planning-failure";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace objflow
