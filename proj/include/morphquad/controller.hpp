#pragma once

#include "morphquad/geometry.hpp"
#include "morphquad/rotor.hpp"
#include "morphquad/state.hpp"

namespace morphquad {

struct ControllerGains {
  double pos_p = 10.0;
  double pos_d = 7.0;
  double pos_i = 2.0;
  double att = 16.0;
  double rate_p = 30.0;
  double rate_d = 0.4;
  double rate_i = 50.0;
  double pos_integral_limit = 30.0;   // N, per axis
  double rate_integral_limit = 3.0;   // N m, per axis

  void validate() const;
};

struct Setpoint {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  Vec3 velocity = Vec3::Zero();  // feedforward
};

struct AttitudeCmd {
  Quat attitude = Quat::Identity();
  double thrust = 0.0;  // N, along -z body
};

/// Position PID with gravity compensation; returns the desired inertial force.
class PositionController {
 public:
  explicit PositionController(ControllerGains gains = {}) : gains_(gains) {}

  /// `hold_integral` stops integration, used while the allocator is cutting collective.
  Vec3 update(const Setpoint& sp, const RigidBodyState& state, double mass, double dt,
              bool hold_integral = false);

  const Vec3& integral() const { return integral_; }
  /// Moves trim between the integrator and the model terms.
  void shift_integral(const Vec3& delta);
  void reset() { integral_.setZero(); }

 private:
  ControllerGains gains_;
  Vec3 integral_ = Vec3::Zero();  // N
};

/// Rotation matrix -> unit quaternion, choosing the largest pivot.
Quat quaternion_from_rotation(const Mat3& r);

/// Desired attitude whose body z is opposite the desired force, with heading `yaw`.
/// Holds `previous` with zero thrust when the force is (near) zero.
AttitudeCmd desired_attitude(const Vec3& force, double yaw, const AttitudeCmd& previous = {});

/// omega_des = K_a sign(q_w,err) q_v,err with the error taken in body axes.
Vec3 attitude_control(const Quat& desired, const Quat& current, double gain);

/// Rate PID premultiplied by J plus gyroscopic feedforward. The integral is
/// accumulated in moment units.
class RateController {
 public:
  explicit RateController(ControllerGains gains = {}) : gains_(gains) {}

  Vec3 update(const Vec3& rate_des, const Vec3& rate, const Mat3& inertia, double dt,
              bool hold_integral = false);

  const Vec3& integral() const { return integral_; }
  void shift_integral(const Vec3& delta);
  void reset();

 private:
  ControllerGains gains_;
  Vec3 integral_ = Vec3::Zero();  // N m
  Vec3 last_rate_ = Vec3::Zero();
  bool have_last_ = false;
};

struct AllocationOutput {
  Vec4 omega_sq = Vec4::Zero();      // rad^2/s^2
  RotorThrusts thrusts;              // realizable, within [0, max_thrust]
  RotorThrusts requested;            // A^-1 T before any de-rating
  SaturationReport saturation;       // flags on `requested`
  WrenchSetpoint achieved;           // A * thrusts
  double yaw_scale = 1.0;            // fraction of M_z kept
  double roll_pitch_scale = 1.0;     // fraction of M_x, M_y kept
  bool collective_changed = false;
};

/// Omega^2 = mu^-1 A^-1 [F, M] with saturation handling: yaw is given up
/// first, then collective, and roll/pitch only as a last resort.
AllocationOutput allocate(double collective, const Vec3& moment, const Mat4& allocation,
                          const AirframeParams& params);

/// What the controller believes about the vehicle.
struct ControlModel {
  double mass = 0.0;
  Vec3 cog = Vec3::Zero();
  Mat3 inertia = Mat3::Identity();
  RotorPoints rotors{};
};

/// Position -> attitude -> rate -> allocation cascade.
class FlightController {
 public:
  FlightController(const AirframeParams& params, ControllerGains gains = {});

  /// Outer loop; refreshes the attitude command.
  void update_position(const Setpoint& sp, const RigidBodyState& state, double dt);

  /// Inner loops plus allocation; returns the rotor command.
  AllocationOutput update_attitude(const RigidBodyState& state, double dt);

  /// Installs a new model snapshot. Trim held by the integrators is moved so
  /// the commanded thrusts do not jump when mass or CoG beliefs change.
  void set_model(const ControlModel& model);

  /// Loads integrator trim, e.g. to start in a steady hover.
  void preload(const Vec3& position_integral, const Vec3& rate_integral,
               const RotorThrusts& thrusts);

  const ControlModel& model() const { return model_; }
  const AttitudeCmd& attitude_cmd() const { return attitude_cmd_; }
  const Vec3& force_cmd() const { return force_cmd_; }
  const Vec3& rate_cmd() const { return rate_cmd_; }
  const Vec3& moment_cmd() const { return moment_cmd_; }
  const AllocationOutput& last_output() const { return last_output_; }
  const PositionController& position_loop() const { return position_; }
  const RateController& rate_loop() const { return rate_; }

 private:
  AirframeParams params_;
  ControllerGains gains_;
  PositionController position_;
  RateController rate_;
  ControlModel model_;
  bool have_model_ = false;
  double yaw_ = 0.0;
  AttitudeCmd attitude_cmd_;
  Vec3 force_cmd_ = Vec3::Zero();
  Vec3 rate_cmd_ = Vec3::Zero();
  Vec3 moment_cmd_ = Vec3::Zero();
  AllocationOutput last_output_;
};

}  // namespace morphquad
