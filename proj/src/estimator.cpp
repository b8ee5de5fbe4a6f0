#include "morphquad/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace morphquad {

void EstimatorConfig::validate() const {
  if (!(time_constant > 0.0)) throw ValidationError("time_constant", "must be positive");
  if (!(max_tilt > 0.0)) throw ValidationError("max_tilt", "must be positive");
  if (!(max_rate > 0.0)) throw ValidationError("max_rate", "must be positive");
  if (!(max_accel > 0.0)) throw ValidationError("max_accel", "must be positive");
  if (!(accel_filter_time > 0.0)) throw ValidationError("accel_filter_time", "must be positive");
  if (!(min_payload_mass >= 0.0)) throw ValidationError("min_payload_mass", "must be >= 0");
}

HoverMeasurement measure_from_thrusts(const RotorThrusts& thrusts, const RotorPoints& rotors) {
  const double total = thrusts.total();
  Vec2 moment = Vec2::Zero();
  for (int i = 0; i < 4; ++i) moment += thrusts.f[i] * rotors[i];
  return {total / kGravity, total > 0.0 ? Vec2(moment / total) : Vec2::Zero()};
}

MassEstimator::MassEstimator(const AirframeParams& params, EstimatorConfig config)
    : params_(params), config_(config) {
  config_.validate();
  reset(Morphology::x_config());
}

void MassEstimator::reset(const Morphology& morph) {
  const MassProperties dry = compose_mass_properties(morph, params_);
  state_ = {};
  state_.mass = dry.mass;
  state_.cog_xy = dry.cog.head<2>();
  state_.inertia = dry.inertia;
  have_velocity_ = false;
  accel_.setZero();
}

double MassEstimator::hover_confidence(const RigidBodyState& state, const Vec3& accel) const {
  const double margins[] = {
      1.0 - state.tilt() / config_.max_tilt,
      1.0 - state.rate.norm() / config_.max_rate,
      1.0 - accel.norm() / config_.max_accel,
  };
  return std::max(0.0, *std::min_element(std::begin(margins), std::end(margins)));
}

const EstimatorState& MassEstimator::update(const RotorThrusts& commanded,
                                            const RotorPoints& rotors,
                                            const RigidBodyState& state, double dt) {
  const bool first = !have_velocity_;
  if (!first) {
    const Vec3 raw = (state.velocity - last_velocity_) / dt;
    accel_ += (1.0 - std::exp(-dt / config_.accel_filter_time)) * (raw - accel_);
  }
  last_velocity_ = state.velocity;
  have_velocity_ = true;

  state_.hover_confidence = first ? 0.0 : hover_confidence(state, accel_);
  state_.updated = state_.hover_confidence > 0.0 && commanded.total() > 0.0;
  if (state_.updated) {
    const HoverMeasurement raw = measure_from_thrusts(commanded, rotors);
    const double alpha = 1.0 - std::exp(-dt / config_.time_constant);
    state_.mass += alpha * (raw.mass - state_.mass);
    state_.mass = std::max(state_.mass, params_.dry_mass() - config_.mass_floor_slack);
    state_.cog_xy += alpha * (raw.cog_xy - state_.cog_xy);
  }
  state_.payload_mass = payload_mass();
  return state_;
}

const EstimatorState& MassEstimator::update(const RotorThrusts& commanded,
                                            const Morphology& morph,
                                            const RigidBodyState& state, double dt) {
  update(commanded, rotor_layout(morph, params_), state, dt);
  state_.inertia = inertia_estimate(morph);
  return state_;
}

double MassEstimator::payload_mass() const {
  return std::max(0.0, state_.mass - params_.dry_mass());
}

MassProperties MassEstimator::mass_properties(const Morphology& morph) const {
  MassProperties out;
  out.mass = state_.mass;
  out.cog = Vec3(state_.cog_xy.x(), state_.cog_xy.y(), params_.cog_z_nominal);
  out.inertia = inertia_estimate(morph);
  return out;
}

PayloadSpec MassEstimator::inferred_payload(const Morphology& morph) const {
  MassProperties est;
  est.mass = state_.mass;
  est.cog = Vec3(state_.cog_xy.x(), state_.cog_xy.y(), params_.cog_z_nominal);
  const auto where = infer_payload_position(est, morph, params_, config_.min_payload_mass);
  if (!where) return {};
  return PayloadSpec::cube(payload_mass(), *where, params_);
}

Mat3 MassEstimator::inertia_estimate(const Morphology& morph) const {
  return compose_mass_properties(morph, params_, inferred_payload(morph)).inertia;
}

}  // namespace morphquad
