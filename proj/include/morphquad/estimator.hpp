#pragma once

#include "morphquad/geometry.hpp"
#include "morphquad/rotor.hpp"
#include "morphquad/state.hpp"

namespace morphquad {

struct EstimatorConfig {
  double time_constant = 0.5;           // s, first-order filter on mass and CoG
  double max_tilt = deg2rad(5.0);       // hover gate
  double max_rate = 0.2;                // rad/s
  double max_accel = 0.3;               // m/s^2, kinematic acceleration
  double accel_filter_time = 0.05;      // s, smoothing of the differenced velocity
  double mass_floor_slack = 0.05;       // kg below dry mass the estimate may sit
  double min_payload_mass = 0.05;       // kg, smaller payloads are treated as absent

  void validate() const;
};

struct EstimatorState {
  double mass = 0.0;
  Vec2 cog_xy = Vec2::Zero();
  Mat3 inertia = Mat3::Identity();
  /// 0 when any hover gate fails, otherwise the smallest relative margin.
  double hover_confidence = 0.0;
  bool updated = false;  // whether the last update() changed the estimates
  double payload_mass = 0.0;
};

/// Raw single-sample estimates from commanded thrusts near hover.
struct HoverMeasurement {
  double mass;
  Vec2 cog_xy;
};

HoverMeasurement measure_from_thrusts(const RotorThrusts& thrusts, const RotorPoints& rotors);

/// Online mass / CoG / inertia estimator. Single writer: call update() once
/// per control tick; readers take copies of state().
class MassEstimator {
 public:
  MassEstimator(const AirframeParams& params, EstimatorConfig config = {});

  /// Feeds the currently commanded thrusts and the rotor layout they act through.
  const EstimatorState& update(const RotorThrusts& commanded, const RotorPoints& rotors,
                               const RigidBodyState& state, double dt);

  /// Same, with the rotor layout taken from `morph`; also refreshes the inertia estimate.
  const EstimatorState& update(const RotorThrusts& commanded, const Morphology& morph,
                               const RigidBodyState& state, double dt);

  const EstimatorState& state() const { return state_; }
  const EstimatorConfig& config() const { return config_; }

  /// Estimated payload mass, clamped at zero.
  double payload_mass() const;

  /// Mass properties with z_CoG fixed at the nominal value.
  MassProperties mass_properties(const Morphology& morph) const;

  /// Payload implied by the current estimates (cube-shaped), or empty.
  PayloadSpec inferred_payload(const Morphology& morph) const;

  /// Composite inertia using the inferred payload; dry airframe when none.
  Mat3 inertia_estimate(const Morphology& morph) const;

  /// Hover-gate confidence for a state with the given kinematic acceleration.
  double hover_confidence(const RigidBodyState& state, const Vec3& accel) const;

  void reset(const Morphology& morph);

 private:
  AirframeParams params_;
  EstimatorConfig config_;
  EstimatorState state_;
  Vec3 last_velocity_ = Vec3::Zero();
  Vec3 accel_ = Vec3::Zero();
  bool have_velocity_ = false;
};

}  // namespace morphquad
