#include "morphquad/state.hpp"

#include <algorithm>
#include <cmath>

namespace morphquad {

double RigidBodyState::tilt() const {
  const Vec3 body_z = attitude * Vec3::UnitZ();
  return std::acos(std::clamp(body_z.z(), -1.0, 1.0));
}

bool RigidBodyState::finite() const {
  return position.allFinite() && velocity.allFinite() && attitude.coeffs().allFinite() &&
         rate.allFinite();
}

}  // namespace morphquad
