#pragma once

#include "morphquad/geometry.hpp"

namespace morphquad {

/// Per-rotor thrust, newtons.
struct RotorThrusts {
  Vec4 f = Vec4::Zero();

  double total() const { return f.sum(); }
  double spread() const { return f.maxCoeff() - f.minCoeff(); }
};

/// Collective force and body moments. `collective` is the upward thrust
/// magnitude, i.e. -F_z in the z-down body frame, so hover has collective = m g.
struct WrenchSetpoint {
  double collective = 0.0;
  Vec3 moment = Vec3::Zero();

  Vec4 as_vector() const { return {collective, moment.x(), moment.y(), moment.z()}; }
  static WrenchSetpoint from_vector(const Vec4& t) { return {t[0], t.tail<3>()}; }
};

/// Rotor spin signs, rotor i's reaction torque is sign_i * (kappa/mu) * f_i.
/// (+, -, +, -) corresponds to (CCW, CW, CCW, CW).
inline constexpr std::array<double, 4> kSpinSign{1.0, -1.0, 1.0, -1.0};

/// Largest allowed 2-norm condition number of the allocation matrix.
inline constexpr double kMaxAllocationCondition = 1e8;

struct SaturationReport {
  std::array<bool, 4> below_zero{};
  std::array<bool, 4> above_max{};

  bool any() const;
  int count() const;
};

struct AllocationResult {
  RotorThrusts thrusts;      // unclamped A^-1 T
  SaturationReport saturation;
};

/// 4x4 map from rotor thrusts to [collective, Mx, My, Mz] about `cog`.
Mat4 allocation_matrix(const RotorPoints& rotors, const Vec3& cog, const AirframeParams& params);

double allocation_condition(const Mat4& a);

/// f = A^-1 T. Throws AllocationSingularError when cond(A) exceeds the guard.
/// Entries outside [0, max_thrust] are reported, not clamped.
AllocationResult wrench_to_thrusts(const WrenchSetpoint& wrench, const Mat4& a, double max_thrust);

/// Wrench produced by `thrusts` through `a`.
WrenchSetpoint thrusts_to_wrench(const RotorThrusts& thrusts, const Mat4& a);

/// P = gamma' f^1.5. Throws DomainError for f < 0.
double thrust_to_power(double thrust, double power_coeff);
double total_power(const Vec4& thrusts, double power_coeff);

/// Omega_i = sqrt(f_i / mu). Throws DomainError for negative thrust.
Vec4 thrusts_to_speeds(const RotorThrusts& thrusts, const AirframeParams& params);
RotorThrusts speeds_to_thrusts(const Vec4& speeds, const AirframeParams& params);

}  // namespace morphquad
