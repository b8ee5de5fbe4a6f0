#include "morphquad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace morphquad {

namespace {

// Hinge corners of the square body, in rotor order (+,+), (-,+), (-,-), (+,-).
constexpr std::array<std::array<double, 2>, 4> kHingeSigns{{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};

Vec2 hinge(const AirframeParams& params, int arm) {
  const double h = 0.5 * params.body_width;
  return {kHingeSigns[arm][0] * h, kHingeSigns[arm][1] * h};
}

Vec2 arm_direction(const Morphology& morph, int arm) {
  const double heading = arm_heading(morph, arm);
  return {std::cos(heading), std::sin(heading)};
}

bool symmetric_positive_definite(const Mat3& m, bool allow_semidefinite) {
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm())) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  const double smallest = eig.eigenvalues().minCoeff();
  return allow_semidefinite ? smallest >= -1e-15 : smallest > 0.0;
}

}  // namespace

Mat3 box_inertia(double mass, double sx, double sy, double sz) {
  const double k = mass / 12.0;
  return Vec3(k * (sy * sy + sz * sz), k * (sx * sx + sz * sz), k * (sx * sx + sy * sy))
      .asDiagonal();
}

Mat3 cube_inertia(double mass, double side) {
  return Mat3::Identity() * (mass * side * side / 6.0);
}

void AirframeParams::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
  };
  require(body_width > 0.0, "body_width", "must be positive");
  require(arm_length > 0.0, "arm_length", "must be positive");
  require(body_mass > 0.0, "body_mass", "must be positive");
  require(arm_mass > 0.0, "arm_mass", "must be positive");
  require(lift_coeff > 0.0, "lift_coeff", "must be positive");
  require(drag_coeff > 0.0, "drag_coeff", "must be positive");
  require(power_coeff > 0.0, "power_coeff", "must be positive");
  require(max_thrust > 0.0, "max_thrust", "must be positive");
  require(prop_diameter >= 0.0, "prop_diameter", "must be non-negative");
  require(arm_com_fraction >= 0.0 && arm_com_fraction <= 1.0, "arm_com_fraction",
          "must lie in [0, 1]");
  require(theta_min < theta_max, "theta_min", "must be below theta_max");
  require(symmetric_positive_definite(body_inertia_cm, false), "body_inertia_cm",
          "must be symmetric positive definite");
  require(symmetric_positive_definite(arm_inertia_cm, false), "arm_inertia_cm",
          "must be symmetric positive definite");
}

PayloadSpec PayloadSpec::cube(double mass, const Vec3& position, const AirframeParams& params) {
  return {mass, position, cube_inertia(mass, 0.5 * params.body_width)};
}

double arm_heading(const Morphology& morph, int arm) {
  return morph.theta[arm] + 0.5 * kPi * arm;
}

bool angles_within_limits(const Morphology& morph, const AirframeParams& params) {
  constexpr double slack = 1e-12;
  return (morph.theta.array() >= params.theta_min - slack).all() &&
         (morph.theta.array() <= params.theta_max + slack).all();
}

RotorPoints rotor_layout(const Morphology& morph, const AirframeParams& params) {
  RotorPoints rotors;
  for (int i = 0; i < 4; ++i) {
    rotors[i] = hinge(params, i) + params.arm_length * arm_direction(morph, i);
  }
  return rotors;
}

double min_rotor_separation(const RotorPoints& rotors) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) best = std::min(best, (rotors[i] - rotors[j]).norm());
  }
  return best;
}

RotorPoints rotor_positions(const Morphology& morph, const AirframeParams& params) {
  if (!angles_within_limits(morph, params)) {
    std::ostringstream msg;
    msg << "arm angle outside [" << rad2deg(params.theta_min) << ", " << rad2deg(params.theta_max)
        << "] deg: (" << morph.degrees().transpose() << ")";
    throw DomainError(msg.str());
  }
  RotorPoints rotors = rotor_layout(morph, params);
  if (min_rotor_separation(rotors) < params.prop_diameter) {
    throw DomainError("propeller disks overlap");
  }
  return rotors;
}

Vec3 arm_com(const Morphology& morph, const AirframeParams& params, int arm) {
  const Vec2 xy =
      hinge(params, arm) + params.arm_com_fraction * params.arm_length * arm_direction(morph, arm);
  return {xy.x(), xy.y(), params.arm_com_z};
}

std::vector<MassComponent> mass_components(const Morphology& morph, const AirframeParams& params,
                                           const PayloadSpec& payload) {
  std::vector<MassComponent> parts;
  parts.reserve(6);
  parts.push_back({params.body_mass, params.body_com, params.body_inertia_cm});
  for (int i = 0; i < 4; ++i) {
    const Mat3 r = rot_z(arm_heading(morph, i));
    parts.push_back({params.arm_mass, arm_com(morph, params, i),
                     r * params.arm_inertia_cm * r.transpose()});
  }
  if (payload.mass > 0.0) parts.push_back({payload.mass, payload.position, payload.inertia_cm});
  return parts;
}

MassProperties compose_mass_properties(const Morphology& morph, const AirframeParams& params,
                                       const PayloadSpec& payload) {
  const auto parts = mass_components(morph, params, payload);
  MassProperties out;
  Vec3 moment = Vec3::Zero();
  for (const auto& p : parts) {
    out.mass += p.mass;
    moment += p.mass * p.com;
  }
  out.cog = moment / out.mass;
  out.inertia.setZero();
  for (const auto& p : parts) {
    const Mat3 s = skew(p.com - out.cog);
    out.inertia += p.inertia_cm - p.mass * s * s;
  }
  // Symmetrize away round-off.
  out.inertia = 0.5 * (out.inertia + out.inertia.transpose()).eval();
  return out;
}

std::optional<Vec3> infer_payload_position(const MassProperties& estimate, const Morphology& morph,
                                           const AirframeParams& params,
                                           double min_payload_mass) {
  const double payload_mass = estimate.mass - params.dry_mass();
  if (payload_mass <= min_payload_mass) return std::nullopt;
  Vec3 moment = estimate.mass * estimate.cog - params.body_mass * params.body_com;
  for (int i = 0; i < 4; ++i) moment -= params.arm_mass * arm_com(morph, params, i);
  return moment / payload_mass;
}

}  // namespace morphquad
