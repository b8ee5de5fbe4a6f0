#pragma once

// YAML scenario and sweep files. Angles are degrees in files and radians in
// memory; keys carrying degrees end in _deg or _deg_s.

#include <string>
#include <vector>

#include "morphquad/simulator.hpp"

namespace morphquad {

inline constexpr int kSchemaVersion = 1;

/// Validation failure tied to a place in a config file. line is 1-based, 0 if unknown.
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string field, const std::string& message, std::string source, int line);

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_ = 0;
};

/// Direction of a payload offset in the body xy plane.
struct SweepDirection {
  std::string label;  // "+x", "-x", "+y", "-y", "xy"
  Vec2 unit = Vec2::UnitX();
};

/// Throws ValidationError for an unknown label.
SweepDirection parse_direction(const std::string& label);

struct SweepGrid {
  std::vector<double> offsets;  // m
  std::vector<SweepDirection> directions;
  std::vector<FlightMode> modes;
  double payload_mass = 1.0;    // kg
};

struct SweepSpec {
  std::string name = "sweep";
  ScenarioSpec base;  // initial_payload is replaced per cell
  SweepGrid grid;
  int threads = 0;    // 0: hardware concurrency

  void validate() const;
};

/// `source` names the text in error messages and anchors relative paths.
ScenarioSpec parse_scenario(const std::string& text, const std::string& source = "<string>");
ScenarioSpec load_scenario(const std::string& path);
std::string dump_scenario(const ScenarioSpec& spec);

SweepSpec parse_sweep(const std::string& text, const std::string& source = "<string>");
SweepSpec load_sweep(const std::string& path);
std::string dump_sweep(const SweepSpec& spec);

AirframeParams parse_airframe(const std::string& text, const std::string& source = "<string>");
AirframeParams load_airframe(const std::string& path);
std::string dump_airframe(const AirframeParams& params);

enum class ConfigKind { scenario, sweep, airframe };

/// Sweep if the file has a top-level grid, airframe if it only holds airframe
/// keys, scenario otherwise.
ConfigKind config_kind(const std::string& path);

}  // namespace morphquad
