#pragma once

#include "morphquad/types.hpp"

namespace morphquad {

/// Rigid-body truth. `position`/`velocity` refer to the body-frame origin,
/// `attitude` rotates body vectors into the inertial frame.
struct RigidBodyState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Quat attitude = Quat::Identity();
  Vec3 rate = Vec3::Zero();  // body angular rate

  /// Angle between body z and inertial z, rad.
  double tilt() const;
  bool finite() const;
};

}  // namespace morphquad
