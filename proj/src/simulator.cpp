#include "morphquad/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace morphquad {

namespace {

constexpr double kMaxDt = 5e-3;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using StateVec = Eigen::Matrix<double, 18, 1>;  // p v q w f E

StateVec pack(const PlantState& s) {
  StateVec x;
  x.segment<3>(0) = s.body.position;
  x.segment<3>(3) = s.body.velocity;
  x.segment<4>(6) << s.body.attitude.w(), s.body.attitude.x(), s.body.attitude.y(),
      s.body.attitude.z();
  x.segment<3>(10) = s.body.rate;
  x.segment<4>(13) = s.actuators.thrust;
  x[17] = s.energy.consumed;
  return x;
}

Quat quat_of(const StateVec& x) {
  return Quat(x[6], x[7], x[8], x[9]);
}

struct Plant {
  const RotorPoints& rotors;
  const MassProperties& mass;
  const Mat3& inertia_inv;
  const Vec4& thrust_cmd;
  const AirframeParams& params;
  const SimParams& sim;

  StateVec derivative(const StateVec& x) const {
    const Quat q = quat_of(x).normalized();
    const Mat3 r = q.toRotationMatrix();
    const Vec3 w = x.segment<3>(10);
    const Vec4 f = x.segment<4>(13).cwiseMax(0.0);
    const Vec3& c = mass.cog;

    const Vec3 moment = rotor_moments(f, rotors, c, params);
    const Vec3 w_dot = inertia_inv * (moment - w.cross(mass.inertia * w));
    const Vec3 a_cog = kGravity * Vec3::UnitZ() + r * Vec3(0.0, 0.0, -f.sum() / mass.mass);
    const Vec3 a_origin = a_cog - r * (w_dot.cross(c) + w.cross(w.cross(c)));

    const Quat q_dot = Quat(0.5 * (Quat(x[6], x[7], x[8], x[9]) * Quat(0.0, w.x(), w.y(), w.z()))
                                      .coeffs());
    StateVec dx;
    dx.segment<3>(0) = x.segment<3>(3);
    dx.segment<3>(3) = a_origin;
    dx.segment<4>(6) << q_dot.w(), q_dot.x(), q_dot.y(), q_dot.z();
    dx.segment<3>(10) = w_dot;
    dx.segment<4>(13) = (thrust_cmd - x.segment<4>(13)) / sim.motor_time_constant;
    dx[17] = params.power_coeff * f.array().pow(1.5).sum();
    return dx;
  }
};

bool finite(const StateVec& x) { return x.allFinite(); }

}  // namespace

void SimParams::validate() const {
  if (!(motor_time_constant > 0.0)) throw ValidationError("motor_time_constant", "must be positive");
  if (!(arm_slew_rate > 0.0)) throw ValidationError("arm_slew_rate", "must be positive");
  if (!(crash_tilt > 0.0 && crash_tilt <= kPi)) {
    throw ValidationError("crash_tilt", "must be in (0, 180] deg");
  }
  if (!(saturation_timeout > 0.0)) throw ValidationError("saturation_timeout", "must be positive");
  if (!(usable_energy > 0.0)) throw ValidationError("usable_energy", "must be positive");
}

Vec3 rotor_moments(const Vec4& thrusts, const RotorPoints& rotors, const Vec3& cog,
                   const AirframeParams& params) {
  Vec3 m = Vec3::Zero();
  const double k = params.torque_ratio();
  for (int i = 0; i < 4; ++i) {
    m.x() -= (rotors[i].y() - cog.y()) * thrusts[i];
    m.y() += (rotors[i].x() - cog.x()) * thrusts[i];
    m.z() += kSpinSign[i] * k * thrusts[i];
  }
  return m;
}

PlantState step(const PlantState& state, const ActuatorCommand& command,
                const PayloadSpec& payload, const AirframeParams& params,
                const SimParams& sim, double dt) {
  if (!(dt > 0.0 && dt <= kMaxDt)) throw DomainError("step: dt must be in (0, 5 ms]");

  PlantState next = state;
  const Vec4 target =
      command.arms.theta.cwiseMax(params.theta_min).cwiseMin(params.theta_max);
  const double max_move = sim.arm_slew_rate * dt;
  next.actuators.arms.theta +=
      (target - state.actuators.arms.theta).cwiseMax(-max_move).cwiseMin(max_move);

  const RotorPoints rotors = rotor_layout(next.actuators.arms, params);
  const MassProperties mass = compose_mass_properties(next.actuators.arms, params, payload);
  const Mat3 inertia_inv = mass.inertia.inverse();
  const Vec4 thrust_cmd = command.thrust.cwiseMax(0.0).cwiseMin(params.max_thrust);
  const Plant plant{rotors, mass, inertia_inv, thrust_cmd, params, sim};

  const StateVec x = pack(next);
  const StateVec k1 = plant.derivative(x);
  const StateVec k2 = plant.derivative(x + 0.5 * dt * k1);
  const StateVec k3 = plant.derivative(x + 0.5 * dt * k2);
  const StateVec k4 = plant.derivative(x + dt * k3);
  const StateVec y = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!finite(y)) {
    std::ostringstream msg;
    msg << "simulation diverged at t = " << state.time << " s";
    throw DivergenceError(msg.str());
  }

  next.time = state.time + dt;
  next.body.position = y.segment<3>(0);
  next.body.velocity = y.segment<3>(3);
  next.body.attitude = quat_of(y).normalized();
  next.body.rate = y.segment<3>(10);
  next.actuators.thrust = y.segment<4>(13);
  next.energy.consumed = std::max(state.energy.consumed, y[17]);
  return next;
}

std::string to_string(FlightMode mode) {
  switch (mode) {
    case FlightMode::morphing: return "morphing";
    case FlightMode::morphing_legacy: return "morphing-legacy";
    case FlightMode::fixed_frame: return "fixed-frame";
  }
  return "?";
}

FlightMode parse_flight_mode(const std::string& text) {
  if (text == "morphing") return FlightMode::morphing;
  if (text == "morphing-legacy") return FlightMode::morphing_legacy;
  if (text == "fixed-frame") return FlightMode::fixed_frame;
  throw ValidationError("mode", "unknown mode '" + text +
                                    "' (expected morphing, morphing-legacy or fixed-frame)");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::crash_tilt: return "crash_tilt";
    case Termination::crash_ground: return "crash_ground";
    case Termination::saturation: return "saturation";
    case Termination::energy_exhausted: return "energy_exhausted";
    case Termination::diverged: return "diverged";
  }
  return "?";
}

bool NoiseSpec::any() const {
  return position > 0.0 || velocity > 0.0 || attitude > 0.0 || rate > 0.0 || thrust > 0.0;
}

void NoiseSpec::validate() const {
  const std::pair<const char*, double> fields[] = {{"noise.position", position},
                                                   {"noise.velocity", velocity},
                                                   {"noise.attitude", attitude},
                                                   {"noise.rate", rate},
                                                   {"noise.thrust", thrust}};
  for (const auto& [name, v] : fields) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(name, "must be finite and >= 0");
  }
}

namespace {

// Number of physics steps per period, which must be a whole number.
long steps_per(double hz, double dt, const char* field) {
  const double n = 1.0 / (hz * dt);
  const long r = std::lround(n);
  if (r < 1 || std::abs(n - r) > 1e-6 * n) {
    throw ValidationError(field, "period must be a whole multiple of physics_dt");
  }
  return r;
}

}  // namespace

void LoopRates::validate() const {
  if (!(physics_dt > 0.0 && physics_dt <= kMaxDt)) {
    throw ValidationError("rates.physics_dt", "must be in (0, 0.005] s");
  }
  if (!(attitude_hz > 0.0)) throw ValidationError("rates.attitude_hz", "must be positive");
  if (!(position_hz > 0.0)) throw ValidationError("rates.position_hz", "must be positive");
  if (!(optimizer_hz > 0.0)) throw ValidationError("rates.optimizer_hz", "must be positive");
  if (telemetry_decimation < 1) {
    throw ValidationError("rates.telemetry_decimation", "must be >= 1");
  }
  const long att = steps_per(attitude_hz, physics_dt, "rates.attitude_hz");
  const long pos = steps_per(position_hz, physics_dt, "rates.position_hz");
  const long opt = steps_per(optimizer_hz, physics_dt, "rates.optimizer_hz");
  if (pos % att != 0) throw ValidationError("rates.position_hz", "must divide attitude_hz");
  if (opt % att != 0) throw ValidationError("rates.optimizer_hz", "must divide attitude_hz");
}

void ScenarioSpec::validate() const {
  if (name.empty()) throw ValidationError("name", "must not be empty");
  airframe.validate();
  gains.validate();
  estimator.validate();
  optimizer.validate();
  sim.validate();
  rates.validate();
  noise.validate();
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ValidationError("duration", "must be positive");
  }
  if (!(settle_time >= 0.0 && settle_time < duration)) {
    throw ValidationError("settle_time", "must be in [0, duration)");
  }
  if (!(initial_payload.mass >= 0.0) || !initial_payload.position.allFinite()) {
    throw ValidationError("initial_payload", "mass must be >= 0 and position finite");
  }
  if (!start_position.allFinite()) throw ValidationError("start_position", "must be finite");
  if (!(start_position.z() < 0.0)) {
    throw ValidationError("start_position", "z must be negative (above the ground, z down)");
  }
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const std::string field = "waypoints[" + std::to_string(i) + "]";
    const Waypoint& w = waypoints[i];
    if (!(w.time >= 0.0) || !w.position.allFinite() || !std::isfinite(w.yaw)) {
      throw ValidationError(field, "time must be >= 0 and all values finite");
    }
    if (i > 0 && !(w.time > waypoints[i - 1].time)) {
      throw ValidationError(field + ".time", "timeline must be strictly increasing");
    }
    if (!(w.position.z() < 0.0)) throw ValidationError(field + ".position", "z must be negative");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string field = "events[" + std::to_string(i) + "]";
    const PayloadEvent& e = events[i];
    if (!(e.time >= 0.0) || !std::isfinite(e.time)) {
      throw ValidationError(field + ".time", "must be finite and >= 0");
    }
    if (i > 0 && !(e.time > events[i - 1].time)) {
      throw ValidationError(field + ".time", "timeline must be strictly increasing");
    }
    if (e.kind == PayloadEvent::Kind::attach) {
      if (!(e.payload.mass >= 0.0)) throw ValidationError(field + ".mass", "must be >= 0");
      if (!e.payload.position.allFinite()) {
        throw ValidationError(field + ".position", "must be finite");
      }
      const Mat3& j = e.payload.inertia_cm;
      if (!j.allFinite() || (j - j.transpose()).norm() > 1e-12 * std::max(1.0, j.norm()) ||
          Eigen::SelfAdjointEigenSolver<Mat3>(j).eigenvalues().minCoeff() < -1e-12) {
        throw ValidationError(field + ".inertia", "must be symmetric positive semidefinite");
      }
    }
  }
}

namespace {

class Noise {
 public:
  Noise(const NoiseSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  RigidBodyState corrupt(const RigidBodyState& s) {
    if (!spec_.any()) return s;
    RigidBodyState out = s;
    out.position += gaussian3(spec_.position);
    out.velocity += gaussian3(spec_.velocity);
    const Vec3 tilt = gaussian3(spec_.attitude);
    if (tilt.norm() > 0.0) {
      out.attitude = (s.attitude * Quat(Eigen::AngleAxisd(tilt.norm(), tilt.normalized())))
                         .normalized();
    }
    out.rate += gaussian3(spec_.rate);
    return out;
  }

  Vec4 thrust(const Vec4& f) {
    if (spec_.thrust <= 0.0) return f;
    Vec4 out;
    for (int i = 0; i < 4; ++i) out[i] = f[i] * (1.0 + spec_.thrust * normal_(rng_));
    return out;
  }

 private:
  Vec3 gaussian3(double sigma) {
    if (sigma <= 0.0) return Vec3::Zero();
    return sigma * Vec3(normal_(rng_), normal_(rng_), normal_(rng_));
  }

  NoiseSpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

ControlModel nominal_model(const AirframeParams& params) {
  const Morphology x = Morphology::x_config();
  const MassProperties dry = compose_mass_properties(x, params);
  return {dry.mass, dry.cog, dry.inertia, rotor_layout(x, params)};
}

struct WindowStats {
  std::size_t ticks = 0;
  double err_sq = 0.0;
  double err_max = 0.0;
  double power = 0.0;
  double mass_g = 0.0;
  Vec4 thrust = Vec4::Zero();
  std::size_t saturated = 0;
};

}  // namespace

TelemetryLog run_scenario(const ScenarioSpec& spec, bool keep_rows) {
  spec.validate();
  const AirframeParams& params = spec.airframe;
  const double dt = spec.rates.physics_dt;
  const long att_every = steps_per(spec.rates.attitude_hz, dt, "rates.attitude_hz");
  const long pos_every = steps_per(spec.rates.position_hz, dt, "rates.position_hz");
  const long opt_every = steps_per(spec.rates.optimizer_hz, dt, "rates.optimizer_hz");
  const double att_dt = att_every * dt;
  const double pos_dt = pos_every * dt;
  const long total_steps = std::lround(spec.duration / dt);

  TelemetryLog log;
  RunSummary& summary = log.summary;
  summary.name = spec.name;
  summary.mode = spec.mode;

  const bool morphing = spec.mode != FlightMode::fixed_frame;
  const bool adaptive = spec.mode == FlightMode::morphing;

  PayloadSpec payload = spec.initial_payload;
  std::size_t next_event = 0;

  PlantState plant;
  plant.body.position = spec.start_position;
  plant.actuators.arms = Morphology::x_config();
  plant.energy.usable = spec.sim.usable_energy;

  FlightController controller(params, spec.gains);
  const ControlModel nominal = nominal_model(params);
  controller.set_model(nominal);
  {
    // Trim: thrusts that hold the true vehicle still, and the integrator
    // contents a controller with the nominal model needs to produce them.
    const MassProperties truth = compose_mass_properties(plant.actuators.arms, params, payload);
    const Mat4 a_true = allocation_matrix(nominal.rotors, truth.cog, params);
    const Vec4 f = a_true.fullPivLu()
                       .solve(Vec4(truth.mass * kGravity, 0.0, 0.0, 0.0))
                       .cwiseMax(0.0)
                       .cwiseMin(params.max_thrust);
    const Mat4 a_model = allocation_matrix(nominal.rotors, nominal.cog, params);
    const Vec4 wrench = a_model * f;
    const Vec3 gravity_trim = -(truth.mass - nominal.mass) * kGravity * Vec3::UnitZ();
    controller.preload(gravity_trim, wrench.tail<3>(), RotorThrusts{f});
    plant.actuators.thrust = f;
  }
  MassEstimator estimator(params, spec.estimator);
  estimator.reset(plant.actuators.arms);
  Noise noise(spec.noise, spec.seed);

  Morphology arm_target = Morphology::x_config();
  Setpoint setpoint{spec.start_position, 0.0, Vec3::Zero()};
  std::size_t next_waypoint = 0;
  ActuatorCommand command{plant.actuators.thrust, arm_target};
  AllocationOutput alloc = controller.last_output();

  WindowStats window;
  std::size_t control_ticks = 0, saturated_ticks = 0;
  long saturated_run = 0;
  const long saturation_limit = std::lround(spec.sim.saturation_timeout / att_dt);

  auto finish = [&](Termination t, const std::string& why) {
    summary.termination = t;
    summary.crashed = t == Termination::crash_tilt || t == Termination::crash_ground ||
                      t == Termination::saturation || t == Termination::diverged;
    summary.reason = why;
  };
  finish(Termination::completed, "");

  long i = 0;
  for (; i < total_steps; ++i) {
    const double t = i * dt;
    while (next_event < spec.events.size() && spec.events[next_event].time <= t + 1e-12) {
      const PayloadEvent& e = spec.events[next_event++];
      payload = e.kind == PayloadEvent::Kind::attach ? e.payload : PayloadSpec{};
    }

    if (i % att_every == 0) {
      const RigidBodyState seen = noise.corrupt(plant.body);
      const Morphology& arms = plant.actuators.arms;
      estimator.update(alloc.thrusts, arms, seen, att_dt);

      if (adaptive) {
        const MassProperties est = estimator.mass_properties(arms);
        controller.set_model({est.mass, est.cog, est.inertia, rotor_layout(arms, params)});
      }
      if (morphing && i % opt_every == 0) {
        const MassModel model =
            payload_mass_model(params, estimator.inferred_payload(arms));
        try {
          // Always from X: C has a saddle there for a centered CoG, so a warm
          // start would leave the arms wherever the last payload put them.
          const OptimizerResult r =
              optimize_morphology(Morphology::x_config(), model, params, spec.optimizer);
          if (r.objectives.feasible) arm_target = r.morph;
        } catch (const OptimizerFailedError&) {
          // keep the previous target
        } catch (const DomainError&) {
        }
      }
      if (i % pos_every == 0) {
        while (next_waypoint < spec.waypoints.size() &&
               spec.waypoints[next_waypoint].time <= t + 1e-12) {
          const Waypoint& w = spec.waypoints[next_waypoint++];
          setpoint.position = w.position;
          setpoint.yaw = w.yaw;
        }
        controller.update_position(setpoint, seen, pos_dt);
      }
      alloc = controller.update_attitude(seen, att_dt);
      command.thrust = noise.thrust(alloc.thrusts.f);
      command.arms = arm_target;

      ++control_ticks;
      const bool sat = alloc.saturation.any();
      saturated_ticks += sat;
      // Giving up yaw is routine; losing collective or roll/pitch is not.
      const bool derated = alloc.collective_changed || alloc.roll_pitch_scale < 1.0;
      saturated_run = derated ? saturated_run + 1 : 0;

      const Vec3 err = setpoint.position - plant.body.position;
      summary.max_error_overall = std::max(summary.max_error_overall, err.norm());
      const MassProperties truth_mass = compose_mass_properties(arms, params, payload);
      const double power = total_power(plant.actuators.thrust.cwiseMax(0.0), params.power_coeff);
      if (t >= spec.settle_time - 1e-12) {
        ++window.ticks;
        window.err_sq += err.squaredNorm();
        window.err_max = std::max(window.err_max, err.norm());
        window.power += power;
        window.thrust += plant.actuators.thrust;
        window.mass_g += truth_mass.mass * kGravity;
        window.saturated += sat;
      }
      if (keep_rows && (control_ticks - 1) % spec.rates.telemetry_decimation == 0) {
        TelemetryRow row;
        row.time = t;
        row.truth = plant.body;
        row.position_error = err;
        row.wrench = {controller.attitude_cmd().thrust, controller.moment_cmd()};
        row.thrust_cmd = command.thrust;
        row.thrust_actual = plant.actuators.thrust;
        row.omega_sq = alloc.omega_sq;
        row.power = power;
        row.energy = plant.energy.consumed;
        row.arms = arms.theta;
        row.arms_target = arm_target.theta;
        row.estimate = estimator.state();
        row.truth_mass = truth_mass;
        row.saturated = alloc.saturation.count();
        row.yaw_scale = alloc.yaw_scale;
        row.roll_pitch_scale = alloc.roll_pitch_scale;
        log.rows.push_back(std::move(row));
      }
      if (saturated_run > saturation_limit) {
        finish(Termination::saturation, "thrust or roll/pitch de-rated for longer than the timeout");
        break;
      }
    }

    try {
      plant = step(plant, command, payload, params, spec.sim, dt);
    } catch (const DivergenceError& e) {
      finish(Termination::diverged, e.what());
      ++i;
      break;
    }
    if (plant.body.tilt() > spec.sim.crash_tilt) {
      finish(Termination::crash_tilt, "tilt exceeded the crash limit");
      ++i;
      break;
    }
    if (plant.body.position.z() >= 0.0) {
      finish(Termination::crash_ground, "ground contact");
      ++i;
      break;
    }
    if (plant.energy.exhausted()) {
      finish(Termination::energy_exhausted, "usable energy consumed");
      ++i;
      break;
    }
  }

  summary.end_time = plant.time;
  summary.energy_consumed = plant.energy.consumed;
  summary.saturation_fraction =
      control_ticks ? static_cast<double>(saturated_ticks) / control_ticks : 0.0;
  summary.final_arms = plant.actuators.arms;
  summary.final_estimate = estimator.state();
  summary.final_truth = compose_mass_properties(plant.actuators.arms, params, payload);
  summary.ticks = control_ticks;
  if (window.ticks > 0) {
    const double n = static_cast<double>(window.ticks);
    summary.mean_power = window.power / n;
    summary.steady_error = std::sqrt(window.err_sq / n);
    summary.max_error = window.err_max;
    summary.mean_thrust = window.thrust / n;
    summary.thrust_spread = summary.mean_thrust.maxCoeff() - summary.mean_thrust.minCoeff();
    summary.thrust_spread_ratio = summary.thrust_spread / (window.mass_g / n);
  } else {
    summary.mean_power = summary.steady_error = summary.max_error = kNaN;
    summary.thrust_spread = summary.thrust_spread_ratio = kNaN;
    summary.mean_thrust = Vec4::Constant(kNaN);
  }
  summary.flight_time = summary.crashed || window.ticks == 0
                            ? 0.0
                            : spec.sim.usable_energy / summary.mean_power;
  return log;
}

double flight_time(const ScenarioSpec& spec, std::string* reason) {
  const RunSummary s = run_scenario(spec, false).summary;
  if (reason) {
    *reason = s.crashed ? s.reason
              : std::isnan(s.mean_power) ? "run ended before the steady window"
                                         : "";
  }
  return s.flight_time;
}

ScenarioSpec hover_scenario(FlightMode mode, const PayloadSpec& payload, double duration) {
  ScenarioSpec spec;
  spec.name = "hover";
  spec.mode = mode;
  spec.duration = duration;
  spec.settle_time = duration / 2.0;
  spec.initial_payload = payload;
  return spec;
}

}  // namespace morphquad
