#include "morphquad/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morphquad {

namespace {

constexpr double kMinForce = 1e-6;       // N, below this the attitude is held
constexpr double kAntiParallel = 1e-9;   // 1 + cos(angle) threshold for the 180 deg case

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool empty() const { return lo > hi; }
  double clamp(double v) const { return std::clamp(v, lo, hi); }
};

// Values of t keeping base + t * dir inside [0, fmax] elementwise.
Interval feasible_range(const Vec4& base, const Vec4& dir, double fmax) {
  constexpr double kSlack = 1e-12;
  Interval out;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(dir[i]) < 1e-15) {
      if (base[i] < -kSlack || base[i] > fmax + kSlack) return {1.0, 0.0};
      continue;
    }
    double a = (0.0 - base[i]) / dir[i];
    double b = (fmax - base[i]) / dir[i];
    if (a > b) std::swap(a, b);
    out.lo = std::max(out.lo, a);
    out.hi = std::min(out.hi, b);
  }
  return out;
}

Vec3 clamp_each(const Vec3& v, double limit) {
  return v.cwiseMax(-limit).cwiseMin(limit);
}

// Part of `delta` that only gives back trim the integrator holds: each
// component moves toward zero and stops there.
Vec3 releasable(const Vec3& held, const Vec3& delta) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const double target = held[i] + delta[i];
    out[i] = std::clamp(target, std::min(held[i], 0.0), std::max(held[i], 0.0)) - held[i];
  }
  return out;
}

}  // namespace

void ControllerGains::validate() const {
  for (double g : {pos_p, pos_d, pos_i, att, rate_p, rate_d, rate_i}) {
    if (!(g >= 0.0)) throw ValidationError("gains", "all gains must be non-negative");
  }
  if (!(pos_integral_limit > 0.0)) throw ValidationError("pos_integral_limit", "must be positive");
  if (!(rate_integral_limit > 0.0)) {
    throw ValidationError("rate_integral_limit", "must be positive");
  }
}

Vec3 PositionController::update(const Setpoint& sp, const RigidBodyState& state, double mass,
                                double dt, bool hold_integral) {
  const Vec3 error = sp.position - state.position;
  if (!hold_integral) {
    integral_ = clamp_each(integral_ + gains_.pos_i * error * dt, gains_.pos_integral_limit);
  }
  // Derivative on the measurement: no kick on setpoint steps.
  const Vec3 damping = gains_.pos_d * (sp.velocity - state.velocity);
  const Vec3 gravity_comp = -mass * kGravity * Vec3::UnitZ();  // z down, so "up" is -z
  return gains_.pos_p * error + damping + integral_ + gravity_comp;
}

void PositionController::shift_integral(const Vec3& delta) {
  integral_ = clamp_each(integral_ + delta, gains_.pos_integral_limit);
}

Quat quaternion_from_rotation(const Mat3& r) {
  const double trace = r.trace();
  double w, x, y, z;
  if (trace >= r(0, 0) && trace >= r(1, 1) && trace >= r(2, 2)) {
    w = 0.5 * std::sqrt(std::max(0.0, 1.0 + trace));
    const double k = 0.25 / w;
    x = k * (r(2, 1) - r(1, 2));
    y = k * (r(0, 2) - r(2, 0));
    z = k * (r(1, 0) - r(0, 1));
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    x = 0.5 * std::sqrt(std::max(0.0, 1.0 + r(0, 0) - r(1, 1) - r(2, 2)));
    const double k = 0.25 / x;
    w = k * (r(2, 1) - r(1, 2));
    y = k * (r(0, 1) + r(1, 0));
    z = k * (r(0, 2) + r(2, 0));
  } else if (r(1, 1) >= r(2, 2)) {
    y = 0.5 * std::sqrt(std::max(0.0, 1.0 - r(0, 0) + r(1, 1) - r(2, 2)));
    const double k = 0.25 / y;
    w = k * (r(0, 2) - r(2, 0));
    x = k * (r(0, 1) + r(1, 0));
    z = k * (r(1, 2) + r(2, 1));
  } else {
    z = 0.5 * std::sqrt(std::max(0.0, 1.0 - r(0, 0) - r(1, 1) + r(2, 2)));
    const double k = 0.25 / z;
    w = k * (r(1, 0) - r(0, 1));
    x = k * (r(0, 2) + r(2, 0));
    y = k * (r(1, 2) + r(2, 1));
  }
  Quat q(w, x, y, z);
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q.normalized();
}

AttitudeCmd desired_attitude(const Vec3& force, double yaw, const AttitudeCmd& previous) {
  const double magnitude = force.norm();
  if (!(magnitude > kMinForce)) return {previous.attitude, 0.0};

  const Mat3 heading = rot_z(yaw);
  // Desired body z, expressed in the heading frame.
  const Vec3 body_z = heading.transpose() * (-force / magnitude);
  const Vec3 axis = Vec3::UnitZ().cross(body_z);
  const double cos_angle = body_z.z();

  Mat3 tilt;
  if (1.0 + cos_angle < kAntiParallel) {
    tilt = Vec3(1.0, -1.0, -1.0).asDiagonal();  // 180 deg about x
  } else {
    const Mat3 k = skew(axis);
    tilt = Mat3::Identity() + k + k * k / (1.0 + cos_angle);
  }
  return {quaternion_from_rotation(heading * tilt), magnitude};
}

Vec3 attitude_control(const Quat& desired, const Quat& current, double gain) {
  const Quat err = current.conjugate() * desired;
  const double sign = err.w() < 0.0 ? -1.0 : 1.0;
  return gain * sign * err.vec();
}

Vec3 RateController::update(const Vec3& rate_des, const Vec3& rate, const Mat3& inertia,
                            double dt, bool hold_integral) {
  const Vec3 error = rate_des - rate;
  if (!hold_integral) {
    integral_ = clamp_each(integral_ + inertia * (gains_.rate_i * error) * dt,
                           gains_.rate_integral_limit);
  }
  // Derivative on the measurement.
  const Vec3 rate_accel = have_last_ ? Vec3((rate - last_rate_) / dt) : Vec3::Zero();
  last_rate_ = rate;
  have_last_ = true;
  const Vec3 pd = gains_.rate_p * error - gains_.rate_d * rate_accel;
  return inertia * pd + integral_ + rate.cross(inertia * rate);
}

void RateController::shift_integral(const Vec3& delta) {
  integral_ = clamp_each(integral_ + delta, gains_.rate_integral_limit);
}

void RateController::reset() {
  integral_.setZero();
  have_last_ = false;
}

AllocationOutput allocate(double collective, const Vec3& moment, const Mat4& allocation,
                          const AirframeParams& params) {
  const double fmax = params.max_thrust;
  const WrenchSetpoint wrench{collective, moment};
  const AllocationResult raw = wrench_to_thrusts(wrench, allocation, fmax);
  const Mat4 inv = allocation.fullPivLu().inverse();

  AllocationOutput out;
  out.requested = raw.thrusts;
  out.saturation = raw.saturation;

  Vec4 f = raw.thrusts.f;
  if (raw.saturation.any()) {
    const Vec4 per_collective = inv.col(0);
    const Vec4 per_roll_pitch = inv.col(1) * moment.x() + inv.col(2) * moment.y();
    const Vec4 per_yaw = inv.col(3) * moment.z();

    // 1. Give up yaw.
    double yaw_scale = 0.0;
    double total = collective;
    double rp_scale = 1.0;
    Vec4 base = per_collective * collective + per_roll_pitch;
    Interval s = feasible_range(base, per_yaw, fmax);
    if (s.empty() || s.hi < 0.0 || s.lo > 0.0) {
      // 2. Keep roll/pitch, move the collective as little as possible.
      Interval c = feasible_range(per_roll_pitch, per_collective, fmax);
      if (c.empty()) {
        // 3. Scale roll/pitch down until some collective fits.
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (feasible_range(mid * per_roll_pitch, per_collective, fmax).empty()) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        rp_scale = lo;
        c = feasible_range(rp_scale * per_roll_pitch, per_collective, fmax);
      }
      total = c.empty() ? collective : c.clamp(collective);
      base = per_collective * total + rp_scale * per_roll_pitch;
      s = feasible_range(base, per_yaw, fmax);
    }
    if (!s.empty() && s.hi >= 0.0 && s.lo <= 0.0) yaw_scale = std::clamp(s.hi, 0.0, 1.0);
    f = base + yaw_scale * per_yaw;
    out.yaw_scale = yaw_scale;
    out.roll_pitch_scale = rp_scale;
    out.collective_changed = std::abs(total - collective) > 1e-12;
  }
  f = f.cwiseMax(0.0).cwiseMin(fmax);
  out.thrusts.f = f;
  out.omega_sq = f / params.lift_coeff;
  out.achieved = thrusts_to_wrench(out.thrusts, allocation);
  return out;
}

FlightController::FlightController(const AirframeParams& params, ControllerGains gains)
    : params_(params), gains_(gains), position_(gains), rate_(gains) {
  gains_.validate();
}

void FlightController::set_model(const ControlModel& model) {
  if (have_model_) {
    // Gravity compensation follows the mass belief; the same force comes out
    // of the position integrator (up is -z).
    const double dm = model.mass - model_.mass;
    if (dm != 0.0) {
      position_.shift_integral(releasable(position_.integral(), dm * kGravity * Vec3::UnitZ()));
    }
    // Moment the current thrusts produce about the new CoG differs by
    // (dy F, -dx F); hand that over to the rate integrator.
    const Vec3 dc = model.cog - model_.cog;
    const double collective = last_output_.thrusts.total();
    if (dc.head<2>().squaredNorm() > 0.0 && collective > 0.0) {
      rate_.shift_integral(
          releasable(rate_.integral(), Vec3(dc.y() * collective, -dc.x() * collective, 0.0)));
    }
  }
  model_ = model;
  have_model_ = true;
}

void FlightController::preload(const Vec3& position_integral, const Vec3& rate_integral,
                               const RotorThrusts& thrusts) {
  position_.reset();
  position_.shift_integral(position_integral);
  rate_.reset();
  rate_.shift_integral(rate_integral);
  last_output_ = {};
  last_output_.thrusts = thrusts;
  last_output_.omega_sq = thrusts.f / params_.lift_coeff;
  attitude_cmd_.thrust = thrusts.total();
}

void FlightController::update_position(const Setpoint& sp, const RigidBodyState& state,
                                       double dt) {
  yaw_ = sp.yaw;
  force_cmd_ = position_.update(sp, state, model_.mass, dt, last_output_.collective_changed);
  attitude_cmd_ = desired_attitude(force_cmd_, yaw_, attitude_cmd_);
}

AllocationOutput FlightController::update_attitude(const RigidBodyState& state, double dt) {
  rate_cmd_ = attitude_control(attitude_cmd_.attitude, state.attitude, gains_.att);
  moment_cmd_ = rate_.update(rate_cmd_, state.rate, model_.inertia, dt,
                            last_output_.roll_pitch_scale < 1.0);
  const Mat4 a = allocation_matrix(model_.rotors, model_.cog, params_);
  try {
    last_output_ = allocate(attitude_cmd_.thrust, moment_cmd_, a, params_);
  } catch (const AllocationSingularError&) {
    // Hold the previous command.
  }
  return last_output_;
}

}  // namespace morphquad
