#pragma once

#include <optional>
#include <vector>

#include "morphquad/types.hpp"

namespace morphquad {

/// The four arm angles, radians, each measured about body z from the arm's
/// reference direction (arm i points along body x rotated by (i-1)*90 deg when
/// its angle is zero).
struct Morphology {
  Vec4 theta = Vec4::Constant(kPi / 4.0);

  static Morphology uniform(double angle) { return {Vec4::Constant(angle)}; }
  /// Standard X configuration, all arms at 45 deg.
  static Morphology x_config() { return uniform(kPi / 4.0); }
  static Morphology from_degrees(const Vec4& deg) { return {deg * (kPi / 180.0)}; }

  Vec4 degrees() const { return theta * (180.0 / kPi); }
};

/// Inertia of a solid box about its own center, edges along the axes.
Mat3 box_inertia(double mass, double size_x, double size_y, double size_z);

/// Inertia of a solid cube of uniform density about its center: (m s^2 / 6) I.
Mat3 cube_inertia(double mass, double side);

/// Static airframe description. Defaults reproduce the 2.0 kg test vehicle:
/// 120 mm body, 134 mm arms, 7 inch propellers, measured P = 8.9 f^1.5.
struct AirframeParams {
  double body_width = 0.120;
  double arm_length = 0.134;
  double body_mass = 1.2;
  double arm_mass = 0.2;
  /// Body inertia about its own center of mass.
  Mat3 body_inertia_cm = box_inertia(1.2, 0.120, 0.120, kDefaultBodyHeight);
  /// Arm inertia about its own center of mass, in the arm frame (x along the arm).
  Mat3 arm_inertia_cm = box_inertia(0.2, 0.134, kDefaultArmSection, kDefaultArmSection);
  Vec3 body_com = Vec3::Zero();
  /// Arm center of mass as a fraction of the arm length, measured from the hinge.
  double arm_com_fraction = 0.5;
  /// z coordinate of the arm centers of mass in the body frame.
  double arm_com_z = 0.0;

  double lift_coeff = 3.406e-6;    // mu, N s^2
  double drag_coeff = 4.598e-8;    // kappa, N m s^2 (kappa/mu = 0.0135 m)
  double power_coeff = 8.9;        // W N^-1.5

  /// z of the composite CoG; never estimated.
  double cog_z_nominal = 0.0;

  double theta_min = deg2rad(-15.0);
  double theta_max = deg2rad(105.0);
  double prop_diameter = 7.0 * 0.0254;
  double max_thrust = 10.2;  // N per rotor

  static constexpr double kDefaultBodyHeight = 0.05;
  static constexpr double kDefaultArmSection = 0.02;

  double dry_mass() const { return body_mass + 4.0 * arm_mass; }
  double torque_ratio() const { return drag_coeff / lift_coeff; }

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Attached payload. Mass zero means "nothing attached".
struct PayloadSpec {
  double mass = 0.0;
  Vec3 position = Vec3::Zero();
  Mat3 inertia_cm = Mat3::Zero();

  /// Uniform cube of side body_width / 2 mounted at `position`.
  static PayloadSpec cube(double mass, const Vec3& position, const AirframeParams& params);
};

struct MassProperties {
  double mass = 0.0;
  Vec3 cog = Vec3::Zero();
  /// Composite inertia about the CoG, body axes.
  Mat3 inertia = Mat3::Identity();
};

/// One rigid part of the vehicle expressed in the body frame.
struct MassComponent {
  double mass;
  Vec3 com;
  Mat3 inertia_cm;  // already rotated into body axes
};

/// Direction angle of arm i (0-based) in the body frame.
double arm_heading(const Morphology& morph, int arm);

bool angles_within_limits(const Morphology& morph, const AirframeParams& params);

/// Rotor hub positions without any feasibility checks.
RotorPoints rotor_layout(const Morphology& morph, const AirframeParams& params);

/// Smallest center-to-center distance between any two rotors.
double min_rotor_separation(const RotorPoints& rotors);

/// Rotor hub positions. Throws DomainError when an angle is outside
/// [theta_min, theta_max] or two propeller disks overlap.
RotorPoints rotor_positions(const Morphology& morph, const AirframeParams& params);

/// Center of mass of arm i (0-based), body frame.
Vec3 arm_com(const Morphology& morph, const AirframeParams& params, int arm);

/// Body, four arms and payload (if any) as body-frame components.
std::vector<MassComponent> mass_components(const Morphology& morph, const AirframeParams& params,
                                           const PayloadSpec& payload);

/// Total mass, CoG and composite inertia about the CoG.
MassProperties compose_mass_properties(const Morphology& morph, const AirframeParams& params,
                                       const PayloadSpec& payload = {});

/// Inverts the composition for the payload mount position. Returns nullopt
/// ("no payload detected") when the implied payload mass is <= min_payload_mass.
std::optional<Vec3> infer_payload_position(const MassProperties& estimate, const Morphology& morph,
                                           const AirframeParams& params,
                                           double min_payload_mass = 1e-6);

}  // namespace morphquad
