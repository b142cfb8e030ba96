#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace monofly {

enum class ErrorCode {
  InvalidArgument,
  DegenerateBaseline,
  PointAtInfinity,
  DomainError,
  BehindCamera,
  NonFinite,
  EmptySearchRegion,
  PatchOutOfBounds,
  ZeroNormPatch,
  NoAnchors,
  AnchorDisparityTooSmall,
  InsufficientMatches,
  InsufficientVisibleSurface,
  NoFreeCell,
  GoalInObstacle,
  StuckAtLocalPlateau,
  PlanningFailed,
  SceneParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptySearchRegion: return "EmptySearchRegion";
    case ErrorCode::PatchOutOfBounds: return "PatchOutOfBounds";
    case ErrorCode::ZeroNormPatch: return "ZeroNormPatch";
    case ErrorCode::NoAnchors: return "NoAnchors";
    case ErrorCode::AnchorDisparityTooSmall: return "AnchorDisparityTooSmall";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::InsufficientVisibleSurface: return "InsufficientVisibleSurface";
    case ErrorCode::NoFreeCell: return "NoFreeCell";
    case ErrorCode::GoalInObstacle: return "GoalInObstacle";
    case ErrorCode::StuckAtLocalPlateau: return "StuckAtLocalPlateau";
    case ErrorCode::PlanningFailed: return "PlanningFailed";
    case ErrorCode::SceneParseError: return "SceneParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace monofly
