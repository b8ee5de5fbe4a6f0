#pragma once

// Shared aliases, constants and error types.
//
// Frame conventions used everywhere in the library:
//   body frame:     x forward, y right, z down; rotors lie in the z = 0 plane
//   inertial frame: x north, y east, z down; the ground is the plane z = 0
//   thrust acts along -z of the body frame
//   attitude quaternions rotate body vectors into the inertial frame
//   (v_inertial = q * v_body)

#include <array>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace morphquad {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

/// Planar rotor hub positions in the body frame, indexed by rotor 1..4 as 0..3.
using RotorPoints = std::array<Vec2, 4>;

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Argument outside the domain of an operation (angle out of range, negative thrust, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Allocation matrix is singular or too badly conditioned to invert.
class AllocationSingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or scenario input.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Skew-symmetric cross-product matrix, skew(a) * b == a.cross(b).
inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

inline Mat3 rot_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

}  // namespace morphquad
