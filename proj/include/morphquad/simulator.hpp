#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morphquad/controller.hpp"
#include "morphquad/estimator.hpp"
#include "morphquad/morphology.hpp"

namespace morphquad {

/// 6S 4200 mAh pack, 85% usable.
inline constexpr double kDefaultUsableEnergy = 6.0 * 3.7 * 4.2 * 3600.0 * 0.85;

struct SimParams {
  double motor_time_constant = 0.03;     // s
  double arm_slew_rate = 3.0;            // rad/s
  double crash_tilt = deg2rad(60.0);
  /// Continuous allocation saturation longer than this ends the run.
  double saturation_timeout = 2.0;       // s
  double usable_energy = kDefaultUsableEnergy;  // J

  void validate() const;
};

struct ActuatorState {
  Vec4 thrust = Vec4::Zero();  // N, lagged
  Morphology arms;             // actual arm angles
};

struct ActuatorCommand {
  Vec4 thrust = Vec4::Zero();
  Morphology arms;
};

struct EnergyAccount {
  double usable = kDefaultUsableEnergy;  // J
  double consumed = 0.0;                 // J

  bool exhausted() const { return consumed >= usable; }
};

struct PlantState {
  double time = 0.0;
  RigidBodyState body;
  ActuatorState actuators;
  EnergyAccount energy;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Body-frame moments of rotor thrusts about `cog` (rotor drag torque included).
Vec3 rotor_moments(const Vec4& thrusts, const RotorPoints& rotors, const Vec3& cog,
                   const AirframeParams& params);

/// Moves the arms toward their targets at the slew limit, then advances the
/// rigid body, the thrust lag and the energy integral by one RK4 step.
/// Throws DomainError for dt outside (0, 5 ms], DivergenceError on NaN.
PlantState step(const PlantState& state, const ActuatorCommand& command,
                const PayloadSpec& payload, const AirframeParams& params,
                const SimParams& sim, double dt);

enum class FlightMode { morphing, morphing_legacy, fixed_frame };

std::string to_string(FlightMode mode);
/// Accepts "morphing", "morphing-legacy", "fixed-frame". Throws ValidationError.
FlightMode parse_flight_mode(const std::string& text);

struct PayloadEvent {
  enum class Kind { attach, detach };
  double time = 0.0;
  Kind kind = Kind::attach;
  PayloadSpec payload;  // ignored for detach
};

struct Waypoint {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

/// Standard deviations of the Gaussian noise added to what the controller and
/// estimator see. `thrust` is relative to the commanded thrust.
struct NoiseSpec {
  double position = 0.0;  // m
  double velocity = 0.0;  // m/s
  double attitude = 0.0;  // rad
  double rate = 0.0;      // rad/s
  double thrust = 0.0;    // fraction

  bool any() const;
  void validate() const;
};

struct LoopRates {
  double physics_dt = 1e-3;   // s
  double attitude_hz = 500.0;
  double position_hz = 100.0;
  double optimizer_hz = 2.0;
  int telemetry_decimation = 1;  // keep every n-th control tick

  void validate() const;
};

struct ScenarioSpec {
  std::string name = "scenario";
  FlightMode mode = FlightMode::morphing;
  AirframeParams airframe;
  ControllerGains gains;
  EstimatorConfig estimator;
  OptimizerSettings optimizer;
  SimParams sim;
  LoopRates rates;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  double duration = 30.0;       // s
  /// Start of the window used for steady-state metrics.
  double settle_time = 15.0;    // s
  /// The run starts in a steady hover at start_position with this payload
  /// mounted, arms at X, estimates at the dry airframe and the integrators
  /// holding the trim.
  PayloadSpec initial_payload;
  Vec3 start_position{0.0, 0.0, -3.0};
  std::vector<Waypoint> waypoints;   // position held at start_position until the first one
  std::vector<PayloadEvent> events;
  std::string output_dir = "output";

  /// Throws ValidationError naming the first bad field.
  void validate() const;
};

struct TelemetryRow {
  double time = 0.0;
  RigidBodyState truth;
  Vec3 position_error = Vec3::Zero();
  WrenchSetpoint wrench;
  Vec4 thrust_cmd = Vec4::Zero();
  Vec4 thrust_actual = Vec4::Zero();
  Vec4 omega_sq = Vec4::Zero();
  double power = 0.0;
  double energy = 0.0;
  Vec4 arms = Vec4::Zero();          // rad
  Vec4 arms_target = Vec4::Zero();   // rad
  EstimatorState estimate;
  MassProperties truth_mass;
  int saturated = 0;                 // rotors outside [0, f_max] before de-rating
  double yaw_scale = 1.0;
  double roll_pitch_scale = 1.0;
};

enum class Termination { completed, crash_tilt, crash_ground, saturation, energy_exhausted, diverged };

std::string to_string(Termination t);

struct RunSummary {
  std::string name;
  FlightMode mode = FlightMode::morphing;
  Termination termination = Termination::completed;
  bool crashed = false;
  std::string reason;
  double end_time = 0.0;
  double energy_consumed = 0.0;      // J
  /// Metrics over [settle_time, end]; NaN when the run ended before the window.
  double mean_power = 0.0;           // W
  double flight_time = 0.0;          // s, usable energy / mean_power, 0 after a crash
  double steady_error = 0.0;         // m, RMS position error
  double max_error = 0.0;            // m
  Vec4 mean_thrust = Vec4::Zero();   // N
  double thrust_spread = 0.0;        // N, of mean_thrust
  double thrust_spread_ratio = 0.0;  // thrust_spread / (m g)
  double saturation_fraction = 0.0;  // share of control ticks with saturation
  double max_error_overall = 0.0;    // m, whole run
  Morphology final_arms;
  EstimatorState final_estimate;
  MassProperties final_truth;
  std::size_t ticks = 0;
};

struct TelemetryLog {
  std::vector<TelemetryRow> rows;
  RunSummary summary;
};

/// Runs the full closed loop. Deterministic for a fixed spec and seed.
TelemetryLog run_scenario(const ScenarioSpec& spec, bool keep_rows = true);

/// Hover-hold flight time in seconds: usable energy over mean steady power.
/// Returns 0 with `reason` set when the hover is not held.
double flight_time(const ScenarioSpec& spec, std::string* reason = nullptr);

/// Hover hold at start_position with `payload` mounted from the start.
ScenarioSpec hover_scenario(FlightMode mode, const PayloadSpec& payload, double duration = 30.0);

}  // namespace morphquad
