#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace shellreg {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
  InvalidArgument,
  DegenerateImmersion,
  NotElliptic,
  ChartUndefinedOnOuter,
  EmptyIntersection,
  NotCompactlyContained,
  MeshTooCoarse,
  ObstacleViolatedByRest,
  KornFailure,
  SingularSystem,
  InfeasibleStart,
  DbreveSingular,
  RegionOverflow,
  NotConcave,
  RhoTooLarge,
  SearchExhausted,
  ScanTooCoarse,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` names the
// failure kind so callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Disk in the parameter plane.  Used both for the shell domain (centered at
/// the origin) and for the local neighbourhoods of the regularity scans.
struct Disk {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;

  bool contains(const Vec2& y, double slack = 0.0) const {
    return (y - center).norm() < radius + slack;
  }
  bool contains_closed(const Vec2& y, double slack = 0.0) const {
    return (y - center).norm() <= radius + slack;
  }
};

}  // namespace shellreg
