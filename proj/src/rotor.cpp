#include "morphquad/rotor.hpp"

#include <cmath>

namespace morphquad {

bool SaturationReport::any() const { return count() > 0; }

int SaturationReport::count() const {
  int n = 0;
  for (int i = 0; i < 4; ++i) n += (below_zero[i] || above_max[i]) ? 1 : 0;
  return n;
}

Mat4 allocation_matrix(const RotorPoints& rotors, const Vec3& cog, const AirframeParams& params) {
  const double ratio = params.torque_ratio();
  Mat4 a;
  for (int i = 0; i < 4; ++i) {
    a(0, i) = 1.0;
    a(1, i) = -(rotors[i].y() - cog.y());
    a(2, i) = rotors[i].x() - cog.x();
    a(3, i) = kSpinSign[i] * ratio;
  }
  return a;
}

double allocation_condition(const Mat4& a) {
  Eigen::JacobiSVD<Mat4> svd(a);
  const auto& s = svd.singularValues();
  if (s[3] <= 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[3];
}

AllocationResult wrench_to_thrusts(const WrenchSetpoint& wrench, const Mat4& a, double max_thrust) {
  if (!(allocation_condition(a) < kMaxAllocationCondition)) {
    throw AllocationSingularError("allocation matrix is singular (rotors collinear with CoG?)");
  }
  AllocationResult out;
  out.thrusts.f = a.fullPivLu().solve(wrench.as_vector());
  for (int i = 0; i < 4; ++i) {
    out.saturation.below_zero[i] = out.thrusts.f[i] < 0.0;
    out.saturation.above_max[i] = out.thrusts.f[i] > max_thrust;
  }
  return out;
}

WrenchSetpoint thrusts_to_wrench(const RotorThrusts& thrusts, const Mat4& a) {
  return WrenchSetpoint::from_vector(a * thrusts.f);
}

double thrust_to_power(double thrust, double power_coeff) {
  if (thrust < 0.0) throw DomainError("negative thrust has no power value");
  return power_coeff * thrust * std::sqrt(thrust);
}

double total_power(const Vec4& thrusts, double power_coeff) {
  double p = 0.0;
  for (int i = 0; i < 4; ++i) p += thrust_to_power(thrusts[i], power_coeff);
  return p;
}

Vec4 thrusts_to_speeds(const RotorThrusts& thrusts, const AirframeParams& params) {
  if ((thrusts.f.array() < 0.0).any()) throw DomainError("negative thrust has no rotor speed");
  return (thrusts.f / params.lift_coeff).cwiseSqrt();
}

RotorThrusts speeds_to_thrusts(const Vec4& speeds, const AirframeParams& params) {
  return {params.lift_coeff * speeds.cwiseProduct(speeds)};
}

}  // namespace morphquad
